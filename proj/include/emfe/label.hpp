#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace emfe {

/// Parasitized is the positive class.
enum class Label : std::uint8_t { Uninfected = 0, Parasitized = 1 };

inline int sign_of(Label label) { return label == Label::Parasitized ? 1 : -1; }

/// Converts integer labels, throwing NonBinaryLabels for anything outside {0, 1}.
std::vector<Label> to_labels(std::span<const int> values);

}  // namespace emfe
