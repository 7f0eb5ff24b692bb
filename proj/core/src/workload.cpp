#include "coldsim/workload.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace coldsim {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Alloc: return "alloc";
    case EventKind::Kill: return "kill";
    case EventKind::Read: return "read";
    case EventKind::Write: return "write";
    case EventKind::Push: return "push";
    case EventKind::Pop: return "pop";
  }
  return "?";
}

void WorkloadSpec::validate() const {
  if (duration_ms == 0) throw ConfigError("workload: duration_ms must be positive");
  if (thread_count == 0) throw ConfigError("workload: thread_count must be positive");
  if (alloc_rate < 0 || hot_access_rate < 0 || cold_access_rate < 0)
    throw ConfigError("workload: rates must be non-negative");
  const double mix = kind_mix_primitive_array + kind_mix_leaf + kind_mix_internal;
  if (kind_mix_primitive_array < 0 || kind_mix_leaf < 0 || kind_mix_internal < 0 ||
      std::abs(mix - 1.0) > 1e-9)
    throw ConfigError("workload: kind mix fractions must be non-negative and sum to 1");
  if (size_min_bytes == 0 || size_min_bytes > size_max_bytes)
    throw ConfigError("workload: need 0 < size_min_bytes <= size_max_bytes");
  if (call_depth_min == 0 || call_depth_min > call_depth_max)
    throw ConfigError("workload: need 0 < call_depth_min <= call_depth_max");
  if (frame_ref_fanout == 0) throw ConfigError("workload: frame_ref_fanout must be positive");
  if (frame_surface_fraction < 0.0 || frame_surface_fraction > 1.0)
    throw ConfigError("workload: frame_surface_fraction must be in [0,1]");
  if (cold_set_size > 0 && hot_access_rate > 0 && cold_access_rate > hot_access_rate)
    throw ConfigError("workload: cold_access_rate must not exceed hot_access_rate");
}

namespace {

std::uint64_t aligned_size(std::uint64_t bytes) {
  return (bytes + kSlotBytes - 1) / kSlotBytes * kSlotBytes;
}

class GeneratedWorkload final : public Workload {
public:
  GeneratedWorkload(const WorkloadSpec& spec, const HeapConfig& heap)
      : _spec(spec), _rng(spec.seed) {
    spec.validate();
    heap.validate();
    if (aligned_size(spec.size_max_bytes) > heap.region_size_bytes)
      throw ConfigError("workload: size_max_bytes exceeds the region size");

    plant(heap);

    const std::uint64_t capacity = heap.mutator_capacity_bytes();
    std::uint64_t churn_budget = capacity > _planted_bytes
                                     ? (capacity - _planted_bytes) / 5
                                     : 0;
    _churn_budget = std::max<std::uint64_t>(churn_budget, heap.region_size_bytes);

    _depth.assign(spec.thread_count, 0);
  }

  const std::vector<TraceEvent>& step(SimTime now) override {
    _events.clear();
    if (now >= _spec.duration_ms)
      throw UsageError("workload: step beyond the configured duration");

    if (now == 0) initial_stacks(now);
    stack_ops(now);

    if (_setup_pos < _planted.size()) {
      setup_allocations(now);
      return _events;
    }

    churn(now);
    accesses(now);
    return _events;
  }

  const GroundTruth& ground_truth() const override { return _truth; }
  SimTime duration_ms() const override { return _spec.duration_ms; }
  std::uint32_t thread_count() const override { return _spec.thread_count; }

private:
  struct PlantedObject {
    ObjectKind kind;
    std::uint64_t size;
    bool cold;
    std::vector<ObjectId> refs;
  };

  double uniform01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(_rng);
  }

  std::uint64_t draw_size() {
    const std::uint64_t lo = (_spec.size_min_bytes + kSlotBytes - 1) / kSlotBytes;
    const std::uint64_t hi = std::max(lo, _spec.size_max_bytes / kSlotBytes);
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(_rng) * kSlotBytes;
  }

  ObjectKind draw_kind() {
    const double u = uniform01();
    if (u < _spec.kind_mix_primitive_array) return ObjectKind::PrimitiveArray;
    if (u < _spec.kind_mix_primitive_array + _spec.kind_mix_leaf) return ObjectKind::Leaf;
    return ObjectKind::Internal;
  }

  // Plants the cold and hot sets in one shuffled allocation order so cold
  // objects end up dispersed among hot ones region by region.
  void plant(const HeapConfig& heap) {
    const std::uint64_t n = _spec.cold_set_size + _spec.hot_set_size;
    std::vector<bool> is_cold(n, false);
    for (std::uint64_t i = 0; i < _spec.cold_set_size; ++i) is_cold[i] = true;
    std::shuffle(is_cold.begin(), is_cold.end(), _rng);

    _planted.reserve(n);
    std::uint64_t cold_bytes = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      PlantedObject p;
      p.cold = is_cold[i];
      p.size = draw_size();
      if (p.cold) {
        p.kind = uniform01() < 0.5 ? ObjectKind::PrimitiveArray : ObjectKind::Leaf;
        cold_bytes += aligned_size(p.size);
      } else {
        p.kind = draw_kind();
        if (p.kind == ObjectKind::Internal && i > 0) {
          const auto fanout = std::uniform_int_distribution<std::uint64_t>(1, 3)(_rng);
          for (std::uint64_t k = 0; k < fanout; ++k) {
            const auto target =
                std::uniform_int_distribution<std::uint64_t>(0, i - 1)(_rng);
            p.refs.push_back(target + 1); // planted ids are 1-based positions
          }
        }
      }
      _planted_bytes += aligned_size(p.size);
      const ObjectId id = i + 1;
      (p.cold ? _truth.cold_ids : _truth.hot_ids).push_back(id);
      _planted.push_back(std::move(p));
    }
    _next_id = n + 1;

    if (cold_bytes > heap.mutator_capacity_bytes())
      throw ConfigError("workload: planted cold set exceeds heap capacity");
    if (_planted_bytes * 10 > heap.mutator_capacity_bytes() * 9)
      throw ConfigError("workload: planted sets exceed 90% of heap capacity");
  }

  void initial_stacks(SimTime now) {
    for (std::uint32_t t = 0; t < _spec.thread_count; ++t) {
      const auto depth = std::uniform_int_distribution<std::uint32_t>(
          _spec.call_depth_min, _spec.call_depth_max)(_rng);
      for (std::uint32_t d = 0; d < depth; ++d) emit_push(now, t);
    }
  }

  void emit_push(SimTime now, std::uint32_t thread) {
    TraceEvent ev;
    ev.time = now;
    ev.kind = EventKind::Push;
    ev.thread = thread;
    ev.slots.resize(_spec.frame_ref_fanout);
    for (Slot& s : ev.slots) s = Slot{false, _rng()};
    _events.push_back(std::move(ev));
    _depth[thread] += 1;
  }

  void emit_pop(SimTime now, std::uint32_t thread) {
    TraceEvent ev;
    ev.time = now;
    ev.kind = EventKind::Pop;
    ev.thread = thread;
    _events.push_back(std::move(ev));
    _depth[thread] -= 1;
  }

  void stack_ops(SimTime now) {
    for (std::uint32_t t = 0; t < _spec.thread_count; ++t) {
      if (_depth[t] == 0) continue; // before initial stacks exist
      const double u = uniform01();
      if (_depth[t] < _spec.call_depth_min) {
        emit_push(now, t);
      } else if (_depth[t] >= _spec.call_depth_max) {
        emit_pop(now, t);
      } else if (u < 0.35) {
        emit_push(now, t);
      } else if (u < 0.70) {
        emit_pop(now, t);
      }
    }
  }

  void setup_allocations(SimTime now) {
    const std::size_t batch = 256;
    for (std::size_t i = 0; i < batch && _setup_pos < _planted.size(); ++i, ++_setup_pos) {
      const PlantedObject& p = _planted[_setup_pos];
      TraceEvent ev;
      ev.time = now;
      ev.kind = EventKind::Alloc;
      ev.thread = static_cast<std::uint32_t>(_setup_pos % _spec.thread_count);
      ev.object = _setup_pos + 1;
      ev.obj_kind = p.kind;
      ev.size = p.size;
      ev.refs = p.refs;
      _events.push_back(std::move(ev));
    }
  }

  void churn(SimTime now) {
    _alloc_acc += _spec.alloc_rate;
    while (_alloc_acc >= 1.0) {
      _alloc_acc -= 1.0;
      TraceEvent ev;
      ev.time = now;
      ev.kind = EventKind::Alloc;
      ev.thread = static_cast<std::uint32_t>(_churn_counter++ % _spec.thread_count);
      ev.object = _next_id++;
      ev.obj_kind = draw_kind();
      ev.size = draw_size();
      if (ev.obj_kind == ObjectKind::Internal && !_churn_fifo.empty()) {
        const auto picks = std::uniform_int_distribution<int>(1, 2)(_rng);
        for (int k = 0; k < picks; ++k) {
          const auto idx = std::uniform_int_distribution<std::size_t>(
              0, _churn_fifo.size() - 1)(_rng);
          ev.refs.push_back(_churn_fifo[idx].first);
        }
      }
      _churn_bytes += aligned_size(ev.size);
      _churn_fifo.emplace_back(ev.object, aligned_size(ev.size));
      _events.push_back(std::move(ev));
    }
    while (_churn_bytes > _churn_budget) {
      const auto [id, bytes] = _churn_fifo.front();
      _churn_fifo.pop_front();
      _churn_bytes -= bytes;
      TraceEvent ev;
      ev.time = now;
      ev.kind = EventKind::Kill;
      ev.object = id;
      _events.push_back(std::move(ev));
    }
  }

  void emit_access(SimTime now, ObjectId id) {
    TraceEvent ev;
    ev.time = now;
    ev.kind = uniform01() < 0.5 ? EventKind::Read : EventKind::Write;
    ev.thread = static_cast<std::uint32_t>(_access_counter++ % _spec.thread_count);
    ev.object = id;
    ev.surface = uniform01() < _spec.frame_surface_fraction;
    _events.push_back(std::move(ev));
  }

  void accesses(SimTime now) {
    if (!_truth.hot_ids.empty()) {
      _hot_acc += _spec.hot_access_rate;
      while (_hot_acc >= 1.0) {
        _hot_acc -= 1.0;
        emit_access(now, _truth.hot_ids[_hot_cursor++ % _truth.hot_ids.size()]);
      }
    }
    if (!_truth.cold_ids.empty()) {
      _cold_acc += _spec.cold_access_rate;
      while (_cold_acc >= 1.0) {
        _cold_acc -= 1.0;
        emit_access(now, _truth.cold_ids[_cold_cursor++ % _truth.cold_ids.size()]);
      }
    }
  }

  WorkloadSpec _spec;
  std::mt19937_64 _rng;
  std::vector<PlantedObject> _planted;
  std::uint64_t _planted_bytes = 0;
  std::size_t _setup_pos = 0;
  GroundTruth _truth;
  ObjectId _next_id = 1;
  std::deque<std::pair<ObjectId, std::uint64_t>> _churn_fifo;
  std::uint64_t _churn_bytes = 0;
  std::uint64_t _churn_budget = 0;
  std::uint64_t _churn_counter = 0;
  std::uint64_t _access_counter = 0;
  double _alloc_acc = 0.0;
  double _hot_acc = 0.0;
  double _cold_acc = 0.0;
  std::size_t _hot_cursor = 0;
  std::size_t _cold_cursor = 0;
  std::vector<std::uint32_t> _depth;
  std::vector<TraceEvent> _events;
};

const char* kind_token(ObjectKind k) {
  switch (k) {
    case ObjectKind::PrimitiveArray: return "pa";
    case ObjectKind::Leaf: return "leaf";
    case ObjectKind::Internal: return "int";
    case ObjectKind::PrimitiveFieldsOnly: return "pfo";
  }
  return "?";
}

ObjectKind parse_kind_token(const std::string& tok, std::size_t line) {
  if (tok == "pa") return ObjectKind::PrimitiveArray;
  if (tok == "leaf") return ObjectKind::Leaf;
  if (tok == "int") return ObjectKind::Internal;
  if (tok == "pfo") return ObjectKind::PrimitiveFieldsOnly;
  throw ConfigError("trace:" + std::to_string(line) + ": unknown object kind '" + tok + "'");
}

class ReplayWorkload final : public Workload {
public:
  ReplayWorkload(std::vector<TraceEvent> events, GroundTruth truth,
                 SimTime duration, std::uint32_t threads)
      : _events(std::move(events)),
        _truth(std::move(truth)),
        _duration(duration),
        _threads(threads) {}

  const std::vector<TraceEvent>& step(SimTime now) override {
    if (now >= _duration) throw UsageError("workload: step beyond the recorded duration");
    _tick.clear();
    while (_cursor < _events.size() && _events[_cursor].time == now) {
      _tick.push_back(_events[_cursor]);
      _cursor += 1;
    }
    if (_cursor < _events.size() && _events[_cursor].time < now)
      throw UsageError("replay: ticks must be stepped in order");
    return _tick;
  }

  const GroundTruth& ground_truth() const override { return _truth; }
  SimTime duration_ms() const override { return _duration; }
  std::uint32_t thread_count() const override { return _threads; }

private:
  std::vector<TraceEvent> _events;
  std::vector<TraceEvent> _tick;
  GroundTruth _truth;
  SimTime _duration;
  std::uint32_t _threads;
  std::size_t _cursor = 0;
};

} // namespace

std::unique_ptr<Workload> build_workload(const WorkloadSpec& spec, const HeapConfig& heap) {
  return std::make_unique<GeneratedWorkload>(spec, heap);
}

TraceWriter::TraceWriter(std::ostream& out, const Workload& workload) : _out(out) {
  _out << "coldsim-trace 1\n";
  _out << "duration " << workload.duration_ms() << "\n";
  _out << "threads " << workload.thread_count() << "\n";
  const GroundTruth& gt = workload.ground_truth();
  _out << "cold " << gt.cold_ids.size();
  for (ObjectId id : gt.cold_ids) _out << ' ' << id;
  _out << "\nhot " << gt.hot_ids.size();
  for (ObjectId id : gt.hot_ids) _out << ' ' << id;
  _out << "\nevents\n";
}

void TraceWriter::append(const std::vector<TraceEvent>& events) {
  for (const TraceEvent& ev : events) {
    _out << ev.time << ' ' << to_string(ev.kind);
    switch (ev.kind) {
      case EventKind::Alloc:
        _out << ' ' << ev.thread << ' ' << ev.object << ' ' << kind_token(ev.obj_kind)
             << ' ' << ev.size << ' ' << ev.refs.size();
        for (ObjectId r : ev.refs) _out << ' ' << r;
        break;
      case EventKind::Kill:
        _out << ' ' << ev.object;
        break;
      case EventKind::Read:
      case EventKind::Write:
        _out << ' ' << ev.thread << ' ' << ev.object << ' ' << (ev.surface ? 1 : 0);
        break;
      case EventKind::Push:
        _out << ' ' << ev.thread << ' ' << ev.slots.size();
        for (const Slot& s : ev.slots)
          _out << ' ' << (s.is_ref ? 'r' : 'p') << s.value;
        break;
      case EventKind::Pop:
        _out << ' ' << ev.thread;
        break;
    }
    _out << '\n';
  }
}

namespace {

class LineTokens {
public:
  LineTokens(const std::string& line, std::size_t number) : _in(line), _line(number) {}

  std::string word(const char* what) {
    std::string tok;
    if (!(_in >> tok)) fail(std::string("missing ") + what);
    return tok;
  }

  std::uint64_t number(const char* what) {
    const std::string tok = word(what);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      fail(std::string("bad ") + what + " '" + tok + "'");
    return value;
  }

  bool done() {
    std::string tok;
    return !(_in >> tok);
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw ConfigError("trace:" + std::to_string(_line) + ": " + msg);
  }

private:
  std::istringstream _in;
  std::size_t _line;
};

} // namespace

std::unique_ptr<Workload> replay_trace(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      lineno += 1;
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };

  if (!next_line() || line != "coldsim-trace 1")
    throw ConfigError("trace:" + std::to_string(std::max<std::size_t>(lineno, 1)) +
                      ": missing 'coldsim-trace 1' header");

  SimTime duration = 0;
  std::uint32_t threads = 0;
  GroundTruth truth;
  bool in_events = false;
  while (!in_events) {
    if (!next_line())
      throw ConfigError("trace:" + std::to_string(lineno) + ": missing 'events' section");
    LineTokens toks(line, lineno);
    const std::string head = toks.word("directive");
    if (head == "duration") {
      duration = toks.number("duration");
    } else if (head == "threads") {
      threads = static_cast<std::uint32_t>(toks.number("thread count"));
    } else if (head == "cold" || head == "hot") {
      const std::uint64_t n = toks.number("id count");
      auto& ids = head == "cold" ? truth.cold_ids : truth.hot_ids;
      for (std::uint64_t i = 0; i < n; ++i) ids.push_back(toks.number("object id"));
    } else if (head == "events") {
      in_events = true;
    } else {
      toks.fail("unknown directive '" + head + "'");
    }
  }
  if (duration == 0)
    throw ConfigError("trace:" + std::to_string(lineno) + ": duration missing or zero");
  if (threads == 0)
    throw ConfigError("trace:" + std::to_string(lineno) + ": thread count missing or zero");

  std::vector<TraceEvent> events;
  SimTime last_time = 0;
  while (next_line()) {
    LineTokens toks(line, lineno);
    TraceEvent ev;
    ev.time = toks.number("time");
    if (ev.time < last_time)
      toks.fail("event times must be non-decreasing");
    last_time = ev.time;
    const std::string kind = toks.word("event kind");
    if (kind == "alloc") {
      ev.kind = EventKind::Alloc;
      ev.thread = static_cast<std::uint32_t>(toks.number("thread"));
      ev.object = toks.number("object id");
      ev.obj_kind = parse_kind_token(toks.word("object kind"), lineno);
      ev.size = toks.number("size");
      const std::uint64_t nrefs = toks.number("ref count");
      for (std::uint64_t i = 0; i < nrefs; ++i) ev.refs.push_back(toks.number("ref"));
    } else if (kind == "kill") {
      ev.kind = EventKind::Kill;
      ev.object = toks.number("object id");
    } else if (kind == "read" || kind == "write") {
      ev.kind = kind == "read" ? EventKind::Read : EventKind::Write;
      ev.thread = static_cast<std::uint32_t>(toks.number("thread"));
      ev.object = toks.number("object id");
      ev.surface = toks.number("surface flag") != 0;
    } else if (kind == "push") {
      ev.kind = EventKind::Push;
      ev.thread = static_cast<std::uint32_t>(toks.number("thread"));
      const std::uint64_t nslots = toks.number("slot count");
      for (std::uint64_t i = 0; i < nslots; ++i) {
        const std::string tok = toks.word("slot");
        if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'p'))
          toks.fail("bad slot token '" + tok + "'");
        std::uint64_t value = 0;
        const auto [ptr, ec] =
            std::from_chars(tok.data() + 1, tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
          toks.fail("bad slot token '" + tok + "'");
        ev.slots.push_back(Slot{tok[0] == 'r', value});
      }
    } else if (kind == "pop") {
      ev.kind = EventKind::Pop;
      ev.thread = static_cast<std::uint32_t>(toks.number("thread"));
    } else {
      toks.fail("unknown event kind '" + kind + "'");
    }
    if (!toks.done()) toks.fail("trailing tokens");
    events.push_back(std::move(ev));
  }

  return std::make_unique<ReplayWorkload>(std::move(events), std::move(truth),
                                          duration, threads);
}

std::unique_ptr<Workload> replay_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path);
  return replay_trace(in);
}

} // namespace coldsim
