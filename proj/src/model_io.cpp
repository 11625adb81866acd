#include "rfrecon/model_io.hpp"

#include "rfrecon/binio.hpp"
#include "rfrecon/errors.hpp"

#include <string>

namespace rfrecon {

namespace {

constexpr char kMagic[4] = {'R', 'L', 'R', 'M'};

void put_header(binio::Writer &w, ContainerKind kind, std::uint64_t d, std::uint64_t p,
                std::uint64_t h, std::uint64_t k, const Activation &act) {
  if (act.kind() == ActivationKind::custom)
    throw PreconditionError("custom activations cannot be persisted");
  w.put_string(std::string(kMagic, 4));
  w.put<std::uint16_t>(kContainerVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(kind));
  w.put<std::uint64_t>(d);
  w.put<std::uint64_t>(p);
  w.put<std::uint64_t>(h);
  w.put<std::uint64_t>(k);
  w.put<std::uint16_t>(act.id());
}

Matrix get_matrix(binio::Reader &r, std::uint64_t rows, std::uint64_t cols) {
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols)
    throw FormatError("array dimensions too large", r.offset());
  return Matrix(rows, cols, r.get_doubles(rows * cols));
}

} // namespace

std::vector<std::uint8_t> encode(const RFModel &model) {
  binio::Writer w;
  put_header(w, ContainerKind::rf, model.d(), model.p(), 0, model.k(), model.activation);
  w.put_doubles(model.V.flat());
  w.put_doubles(model.theta_star.flat());
  return std::move(w.bytes());
}

std::vector<std::uint8_t> encode(const TwoLayerModel &model) {
  binio::Writer w;
  put_header(w, ContainerKind::two_layer, model.d(), model.k() * model.h(), model.h(),
             model.k(), model.activation);
  w.put_doubles(model.theta1.flat());
  w.put_doubles(model.theta2.flat());
  w.put_doubles(model.theta2_init.flat());
  return std::move(w.bytes());
}

std::vector<std::uint8_t> encode(const ReconState &state, const Activation &act) {
  binio::Writer w;
  put_header(w, ContainerKind::recon_state, state.x_hat.cols(), state.x_hat.rows(),
             state.iteration, 0, act);
  w.put_doubles(state.x_hat.flat());
  w.put_doubles(state.momentum.flat());
  return std::move(w.bytes());
}

StoredObject decode(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  if (r.get_string(4) != std::string(kMagic, 4))
    throw FormatError("bad magic, expected RLRM", 0);
  const auto version = r.get<std::uint16_t>();
  if (version != kContainerVersion)
    throw FormatError("unsupported container version " + std::to_string(version), 4);
  const auto kind = r.get<std::uint16_t>();
  const auto d = r.get<std::uint64_t>();
  const auto p = r.get<std::uint64_t>();
  const auto h = r.get<std::uint64_t>();
  const auto k = r.get<std::uint64_t>();
  const std::size_t act_offset = r.offset();
  const auto act_id = r.get<std::uint16_t>();
  Activation act = Activation::relu();
  try {
    act = Activation::from_id(act_id);
  } catch (const PreconditionError &) {
    throw FormatError("unknown activation id " + std::to_string(act_id), act_offset);
  }

  StoredObject out;
  switch (static_cast<ContainerKind>(kind)) {
  case ContainerKind::rf: {
    RFModel m;
    m.activation = act;
    m.V = get_matrix(r, p, d);
    m.theta_star = get_matrix(r, p, k);
    out = std::move(m);
    break;
  }
  case ContainerKind::two_layer: {
    if (p != k * h)
      throw FormatError("two-layer container: p != k * h", 16);
    TwoLayerModel m;
    m.activation = act;
    m.theta1 = get_matrix(r, h, d);
    m.theta2 = get_matrix(r, k, h);
    m.theta2_init = get_matrix(r, k, h);
    out = std::move(m);
    break;
  }
  case ContainerKind::recon_state: {
    ReconCheckpoint c;
    c.activation = act;
    c.state.x_hat = get_matrix(r, p, d);
    c.state.momentum = get_matrix(r, p, d);
    c.state.iteration = h;
    out = std::move(c);
    break;
  }
  default:
    throw FormatError("unknown container kind " + std::to_string(kind), 6);
  }
  if (r.remaining() != 0)
    throw FormatError("trailing bytes after payload", r.offset());
  return out;
}

void save_model(const StoredObject &obj, const std::filesystem::path &path) {
  const auto bytes = std::visit(
      [](const auto &o) -> std::vector<std::uint8_t> {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ReconCheckpoint>)
          return encode(o.state, o.activation);
        else
          return encode(o);
      },
      obj);
  binio::write_file(path.string(), bytes);
}

StoredObject load_model(const std::filesystem::path &path) {
  return decode(binio::read_file(path.string()));
}

} // namespace rfrecon
