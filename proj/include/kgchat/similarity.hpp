#pragma once

#include <span>
#include <stdexcept>

namespace kgchat {

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cosine similarity dot(a, b) / (|a| |b|), clamped to [-1, 1].
/// Returns 0.0 when either vector has zero norm. Throws DimensionMismatch
/// when the lengths differ.
double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace kgchat
