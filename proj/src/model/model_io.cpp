#include "treelearn/model/model_io.hpp"

#include <cstring>
#include <fstream>

#include "treelearn/comm/wire.hpp"
#include "treelearn/errors.hpp"

namespace treelearn {

namespace {
constexpr char kMagic[8] = {'T', 'L', 'M', 'O', 'D', 'E', 'L', '1'};
constexpr size_t kHeaderBytes = 8 + 4 + 8 + 1 + 8;
}  // namespace

void save_model(const std::filesystem::path& path, const SavedModel& model) {
  if (model.weights.size() != (size_t{1} << model.bits)) {
    throw DimensionError("model weights do not span 2^bits entries");
  }
  treelearn::wire::ByteWriter w;
  w.bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.u32(static_cast<uint32_t>(model.bits));
  w.u64(model.weights.size());
  w.u8(static_cast<uint8_t>(model.loss));
  w.f64(model.lambda);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
  out.write(reinterpret_cast<const char*>(model.weights.data()),
            static_cast<std::streamsize>(model.weights.size() * sizeof(double)));
  if (!out) throw IoError("write failure on model '" + path.string() + "'");
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  std::vector<uint8_t> header(kHeaderBytes);
  in.read(reinterpret_cast<char*>(header.data()), kHeaderBytes);
  if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes) ||
      std::memcmp(header.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("'" + path.string() + "' is not a model file");
  }
  treelearn::wire::ByteReader r(std::span<const uint8_t>(header).subspan(sizeof(kMagic)));
  SavedModel m;
  m.bits = static_cast<int>(r.u32());
  uint64_t dim = r.u64();
  uint8_t loss = r.u8();
  m.lambda = r.f64();
  if (m.bits < 1 || m.bits > 31 || dim != (uint64_t{1} << m.bits) || loss > 1) {
    throw IoError("corrupt model header in '" + path.string() + "'");
  }
  m.loss = static_cast<LossKind>(loss);
  m.weights.resize(dim);
  in.read(reinterpret_cast<char*>(m.weights.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(dim * sizeof(double))) {
    throw IoError("truncated model '" + path.string() + "'");
  }
  return m;
}

}  // namespace treelearn
