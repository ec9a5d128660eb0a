#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace praclab {

// All simulated time is integer nanoseconds.
using Ns = std::int64_t;
using BankId = std::int32_t;
using RowId = std::int32_t;
using ActorId = std::int32_t;

inline constexpr BankId kNoBank = -1;
inline constexpr RowId kNoRow = -1;
inline constexpr ActorId kNoActor = -1;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

class InvalidRequest : public Error {
 public:
  using Error::Error;
};

class InvalidCall : public Error {
 public:
  using Error::Error;
};

class NoSafeWindow : public Error {
 public:
  using Error::Error;
};

class DegenerateWindow : public Error {
 public:
  using Error::Error;
};

// Independent stream per (root seed, actor): adding an actor never shifts
// the draws of the others.
inline std::mt19937_64 deriveStream(std::uint64_t rootSeed, std::uint64_t streamId) {
  std::seed_seq seq{static_cast<std::uint32_t>(rootSeed), static_cast<std::uint32_t>(rootSeed >> 32),
                    static_cast<std::uint32_t>(streamId), static_cast<std::uint32_t>(streamId >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace praclab
