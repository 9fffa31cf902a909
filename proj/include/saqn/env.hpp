#pragma once

#include <cstddef>
#include <vector>

#include "saqn/rng.hpp"

namespace saqn {

/// One transition result at the environment interface.
struct EnvStep {
    std::vector<double> observation;
    double reward = 0.0;
    bool done = false;
};

/// Reset/step contract over discrete actions. Implementations are
/// deterministic given the reset draw and the action sequence.
class Environment {
public:
    virtual ~Environment() = default;
    virtual std::vector<double> reset(SeededRng& rng) = 0;
    virtual EnvStep step(int action) = 0;
    virtual std::size_t observation_dim() const = 0;
    virtual int action_count() const = 0;
    virtual bool done() const = 0;
};

}  // namespace saqn
