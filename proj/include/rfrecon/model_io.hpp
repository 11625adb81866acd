#pragma once

// "RLRM" container for trained models and reconstruction checkpoints.
//
//   magic     4 bytes  "RLRM"
//   version   u16      1
//   kind      u16      0 = rf, 1 = two-layer, 2 = recon-state
//   d, p, h, k u64 each
//   activation u16     built-in activation id
//   arrays    raw little-endian f64, in this order:
//     rf:          V (p x d), theta* (p x k)                       h = 0
//     two-layer:   theta1 (h x d), theta2 (k x h), theta2_init     p = k * h
//     recon-state: x_hat (p x d), momentum (p x d)                 p = n rows,
//                                                                  h = iteration, k = 0

#include "rfrecon/features.hpp"
#include "rfrecon/recon.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace rfrecon {

enum class ContainerKind : std::uint16_t { rf = 0, two_layer = 1, recon_state = 2 };

inline constexpr std::uint16_t kContainerVersion = 1;

struct ReconCheckpoint {
  ReconState state;
  Activation activation = Activation::relu();
};

using StoredObject = std::variant<RFModel, TwoLayerModel, ReconCheckpoint>;

std::vector<std::uint8_t> encode(const RFModel &model);
std::vector<std::uint8_t> encode(const TwoLayerModel &model);
std::vector<std::uint8_t> encode(const ReconState &state, const Activation &act);
/// Throws FormatError on bad magic, unknown version or kind, or truncation.
StoredObject decode(std::span<const std::uint8_t> bytes);

void save_model(const StoredObject &obj, const std::filesystem::path &path);
StoredObject load_model(const std::filesystem::path &path);

} // namespace rfrecon
