#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chemstack/packet.hpp"
#include "chemstack/rng.hpp"

namespace chemstack::stack {

struct StackError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An integer gene domain together with its mapping into parameter space.
// Genes are what the evolution engine manipulates; modules only ever see the
// mapped value. LogScale spreads the domain geometrically over
// [out_lo, out_hi]; with zero_off set, the lowest gene means "disabled" and
// maps to 0.
struct ControlSpec {
  std::string name;
  int lo = 0;
  int hi = 0;
  enum class Map { Identity, LogScale } map = Map::Identity;
  double out_lo = 0.0;
  double out_hi = 0.0;
  bool zero_off = false;

  int domain_size() const { return hi - lo + 1; }
  int clamp(long long g) const {
    if (g < lo) return lo;
    if (g > hi) return hi;
    return static_cast<int>(g);
  }
  double value(int gene) const;
};

// Where a module's persisted blob lives in the store:
//  Instance - keyed by genome slot (the usual case),
//  Kind     - shared by every instance of the module kind,
//  Interface- shared by every module providing the same service.
enum class Scope { Instance, Kind, Interface };

class StackModule;

// Static description of a module kind: the service it offers, the services
// its connectors must bind to, its evolvable controls, and a factory.
struct ModuleSpec {
  std::string kind;
  std::string provides;
  std::vector<std::string> connectors;  // required service tags
  std::vector<ControlSpec> controls;
  std::vector<std::string> sensors;
  bool fixed = false;  // composed implicitly (head/tail), not genome-encoded
  Scope scope = Scope::Instance;
  std::function<std::unique_ptr<StackModule>(const ModuleSpec&)> make;
};

// Shared table of module kinds. Insertion order of non-fixed kinds defines
// the genome slot order.
class ModuleRegistry {
 public:
  void add(ModuleSpec spec);
  const ModuleSpec& get(const std::string& kind) const;
  bool has(const std::string& kind) const;
  const std::vector<ModuleSpec>& all() const { return specs_; }
  std::vector<const ModuleSpec*> evolvable() const;

 private:
  std::vector<ModuleSpec> specs_;
};

// Services a running stack offers its modules: the clock, a per-node random
// stream, and an event calendar for self-scheduled work (chemistry firings,
// retransmission timers, traffic generation).
class ModuleHost {
 public:
  virtual ~ModuleHost() = default;
  virtual double now() const = 0;
  virtual Rng& rng() = 0;
  // One-shot callback at absolute time t (>= now). There is no cancellation;
  // modules guard stale callbacks with an epoch counter.
  virtual void call_at(double t, std::function<void()> fn) = 0;
};

// One live module instance in a composed stack. The data path is a pair of
// virtual handlers; the default implementations forward unchanged, so a
// module only overrides the directions it participates in.
class StackModule {
 public:
  explicit StackModule(const ModuleSpec& spec) : spec_(&spec) {}
  virtual ~StackModule() = default;

  const ModuleSpec& spec() const { return *spec_; }
  StackModule* below() const { return below_; }
  StackModule* above() const { return above_; }

  void attach_host(ModuleHost* host) { host_ = host; }
  void wire_below(StackModule* m) {
    below_ = m;
    if (m) m->above_ = this;
  }

  // Mapped values for the controls present in the genome; controls not in
  // the map keep their construction-time defaults.
  virtual void configure(const std::map<std::string, double>&) {}

  virtual void handle_down(Packet&& p, double t) { pass_down(std::move(p), t); }
  virtual void handle_up(Packet&& p, double t) { pass_up(std::move(p), t); }

  // Teardown support: push buffered packets toward the wire.
  virtual void flush(double) {}

  // Persistence across recomposition; blobs are opaque serialized text.
  virtual std::string persist() const { return {}; }
  virtual void restore(const std::string&) {}

  virtual std::map<std::string, double> read_sensors(double) const {
    return {};
  }

 protected:
  void pass_down(Packet&& p, double t) {
    if (below_) below_->handle_down(std::move(p), t);
  }
  void pass_up(Packet&& p, double t) {
    if (above_) above_->handle_up(std::move(p), t);
  }
  ModuleHost* host() const { return host_; }

 private:
  const ModuleSpec* spec_;
  StackModule* below_ = nullptr;
  StackModule* above_ = nullptr;
  ModuleHost* host_ = nullptr;
};

// State blobs that outlive stack teardown/rebuild. Keys encode the scope so
// that re-attachment honors the scoping rules.
class PersistentStore {
 public:
  static std::string key_for(const ModuleSpec& spec, int slot);

  void put(const std::string& key, std::string blob);
  std::optional<std::string> get(const std::string& key) const;
  bool empty() const { return blobs_.empty(); }
  void clear() { blobs_.clear(); }

 private:
  std::map<std::string, std::string> blobs_;
};

}  // namespace chemstack::stack
