// Copyright 2026 The semrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>

namespace semrl {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (files, configs, parameters).
/// The CLI maps this to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during training (non-finite loss).
class TrainingError : public Error {
public:
    TrainingError(std::size_t epoch, std::size_t batch, double loss)
        : Error("non-finite loss " + std::to_string(loss) + " at epoch " +
                std::to_string(epoch) + ", batch " + std::to_string(batch)),
          epoch_(epoch), batch_(batch), loss_(loss) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }
    double loss() const noexcept { return loss_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
    double loss_;
};

/// A mining call ran past its deadline.
class TimeoutError : public Error {
public:
    using Error::Error;
};

/// Cooperative wall-clock budget checked inside long-running loops.
class Deadline {
public:
    using Clock = std::chrono::steady_clock;

    Deadline() = default;
    explicit Deadline(std::chrono::duration<double> budget)
        : at_(Clock::now() + std::chrono::duration_cast<Clock::duration>(budget)) {}

    static Deadline after_seconds(double seconds) {
        if (seconds <= 0.0) return {};
        return Deadline(std::chrono::duration<double>(seconds));
    }

    bool expired() const { return at_ && Clock::now() >= *at_; }

    void check(const char* what) const {
        if (expired()) throw TimeoutError(std::string(what) + ": deadline exceeded");
    }

private:
    std::optional<Clock::time_point> at_;
};

}  // namespace semrl
