#pragma once

// Event-level records of one simulated network and the observer protocol the
// simulators use to emit them.

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <tuple>
#include <string>
#include <vector>

#include "mmq/model.hpp"
#include "mmq/table.hpp"

namespace mmq {

enum class EventKind : std::uint8_t { Start, Arrival, Service, EnvJump, End };

inline const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Start: return "start";
    case EventKind::Arrival: return "arrival";
    case EventKind::Service: return "service";
    case EventKind::EnvJump: return "env";
    case EventKind::End: return "end";
  }
  return "?";
}

// State right after an event, in unscaled time. The allocation is the one in force
// until the next event. Spans are empty (and idle is NaN) when the emitting engine
// does not track that quantity.
struct EventView {
  double time = 0.0;
  EventKind kind = EventKind::Start;
  int cls = -1;  // 0-based class for arrivals and services
  int env = -1;  // 0-based environment state, -1 if unknown
  std::span<const std::int64_t> queues;
  std::span<const double> alloc;
  std::span<const double> busy;
  double idle = std::numeric_limits<double>::quiet_NaN();
  std::span<const std::int64_t> arrivals;
  std::span<const std::int64_t> departures;
};

// Piecewise-constant queue-length path on [0, n * horizon].
struct QueuePath {
  std::size_t classes = 0;
  std::uint64_t n = 1;
  ScalingRegime regime;
  double horizon = 0.0;  // scaled time covered
  // True when environment state and allocation are constant between consecutive
  // records, so occupation integrals can be evaluated exactly from the path.
  bool occupation_exact = false;

  std::vector<double> times;
  std::vector<EventKind> kinds;
  std::vector<int> cls;
  std::vector<int> env;
  std::vector<std::int64_t> queues;  // row-major, classes per record

  std::size_t size() const { return times.size(); }
  std::span<const std::int64_t> queue_vector(std::size_t k) const {
    return {queues.data() + k * classes, classes};
  }
  std::int64_t queue(std::size_t k, std::size_t i) const { return queues[k * classes + i]; }

  void append(const EventView& e) {
    times.push_back(e.time);
    kinds.push_back(e.kind);
    cls.push_back(e.cls);
    env.push_back(e.env);
    queues.insert(queues.end(), e.queues.begin(), e.queues.end());
  }
};

struct PathTrace : QueuePath {
  std::string policy;
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;

  std::vector<double> alloc;  // row-major
  std::vector<double> busy;   // cumulative T_i, row-major
  std::vector<double> idle;   // cumulative I
  std::vector<std::int64_t> arrivals;
  std::vector<std::int64_t> departures;

  std::span<const double> alloc_vector(std::size_t k) const { return {alloc.data() + k * classes, classes}; }
  std::span<const double> busy_vector(std::size_t k) const { return {busy.data() + k * classes, classes}; }
  std::span<const std::int64_t> arrival_vector(std::size_t k) const {
    return {arrivals.data() + k * classes, classes};
  }
  std::span<const std::int64_t> departure_vector(std::size_t k) const {
    return {departures.data() + k * classes, classes};
  }

  EventView view(std::size_t k) const {
    EventView e;
    e.time = times[k];
    e.kind = kinds[k];
    e.cls = cls[k];
    e.env = env[k];
    e.queues = queue_vector(k);
    e.alloc = alloc_vector(k);
    e.busy = busy_vector(k);
    e.idle = idle[k];
    e.arrivals = arrival_vector(k);
    e.departures = departure_vector(k);
    return e;
  }

  void append(const EventView& e) {
    if (e.alloc.size() != classes || e.busy.size() != classes) {
      throw std::logic_error("full traces need allocation and busy-time data");
    }
    QueuePath::append(e);
    alloc.insert(alloc.end(), e.alloc.begin(), e.alloc.end());
    busy.insert(busy.end(), e.busy.begin(), e.busy.end());
    idle.push_back(e.idle);
    arrivals.insert(arrivals.end(), e.arrivals.begin(), e.arrivals.end());
    departures.insert(departures.end(), e.departures.begin(), e.departures.end());
  }
};

inline EventView view_of(const QueuePath& path, std::size_t k) {
  EventView e;
  e.time = path.times[k];
  e.kind = path.kinds[k];
  e.cls = path.cls[k];
  e.env = path.env[k];
  e.queues = path.queue_vector(k);
  return e;
}

// Feed a recorded path through an observer, record by record.
template <class Observer>
void replay(const QueuePath& path, Observer& observer) {
  for (std::size_t k = 0; k < path.size(); ++k) observer.on_event(view_of(path, k));
}

template <class Observer>
void replay(const PathTrace& trace, Observer& observer) {
  for (std::size_t k = 0; k < trace.size(); ++k) observer.on_event(trace.view(k));
}

template <class Path>
struct Recorder {
  Path path;
  void on_event(const EventView& e) { path.append(e); }
};

using QueuePathRecorder = Recorder<QueuePath>;
using TraceRecorder = Recorder<PathTrace>;

// Forward each event to several observers in order.
template <class... Observers>
struct ObserverSet {
  std::tuple<Observers&...> observers;
  explicit ObserverSet(Observers&... obs) : observers(obs...) {}
  void on_event(const EventView& e) {
    std::apply([&](auto&... o) { (o.on_event(e), ...); }, observers);
  }
};

// One row per record: time, kind, class, envState, Q_1..Q_K, alloc_1..alloc_K, T_1..T_K, I.
// Class and environment state are 1-based; 0 means none.
inline void write_trace_csv(std::ostream& out, const PathTrace& trace) {
  std::vector<std::string> header{"time", "kind", "class", "envState"};
  for (std::size_t i = 1; i <= trace.classes; ++i) header.push_back("Q" + std::to_string(i));
  for (std::size_t i = 1; i <= trace.classes; ++i) header.push_back("alloc" + std::to_string(i));
  for (std::size_t i = 1; i <= trace.classes; ++i) header.push_back("T" + std::to_string(i));
  header.push_back("I");
  CsvWriter csv(out, header);
  std::vector<std::string> row;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    row.clear();
    row.push_back(format_double(trace.times[k]));
    row.push_back(to_string(trace.kinds[k]));
    row.push_back(std::to_string(trace.cls[k] + 1));
    row.push_back(std::to_string(trace.env[k] + 1));
    for (const auto q : trace.queue_vector(k)) row.push_back(std::to_string(q));
    for (const auto a : trace.alloc_vector(k)) row.push_back(format_double(a));
    for (const auto b : trace.busy_vector(k)) row.push_back(format_double(b));
    row.push_back(format_double(trace.idle[k]));
    csv.row(row);
  }
}

}  // namespace mmq
