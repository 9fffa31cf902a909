#pragma once

#include <cstddef>
#include <vector>

#include "saqn/errors.hpp"
#include "saqn/rng.hpp"

namespace saqn {

/// One stored interaction. States are whatever the agent feeds the
/// Q-Network: raw observations for QN, latent codes for AQN/SAQN.
struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
};

/// Fixed-capacity ring buffer with FIFO eviction and uniform sampling.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw DomainError("ReplayMemory: capacity must be >= 1");
        buffer_.reserve(capacity);
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return buffer_.size(); }

    void push(Transition t) {
        if (buffer_.size() < capacity_) {
            buffer_.push_back(std::move(t));
        } else {
            buffer_[write_] = std::move(t);
        }
        write_ = (write_ + 1) % capacity_;
    }

    const Transition& at(std::size_t i) const { return buffer_[i]; }

    /// n independent uniform draws (with replacement).
    std::vector<const Transition*> sample(std::size_t n, SeededRng& rng) const {
        if (buffer_.empty()) throw StateError("ReplayMemory::sample on empty buffer");
        std::vector<const Transition*> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = &buffer_[rng.uniform_int(buffer_.size())];
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t write_ = 0;
    std::vector<Transition> buffer_;
};

}  // namespace saqn
