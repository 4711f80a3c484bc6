#include "n2d/nn/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "n2d/core/error.hpp"
#include "n2d/core/io.hpp"

namespace n2d::nn {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'N', '2', 'D', 'G', 'A', 'N', 'C', 'K'};

using TensorMap = std::vector<std::pair<std::string, torch::Tensor>>;

TensorMap collect(Generator& generator, CriticSet& critics) {
  TensorMap out;
  auto add = [&](const std::string& prefix, torch::nn::Module& m) {
    for (const auto& p : m.named_parameters()) out.emplace_back(prefix + p.key(), p.value());
    for (const auto& b : m.named_buffers()) {
      if (b.value().scalar_type() == torch::kFloat) out.emplace_back(prefix + b.key(), b.value());
    }
  };
  add("generator.", *generator);
  add("critic.", *critics);
  return out;
}

nlohmann::json config_json(const GeneratorConfig& c) {
  return {{"height", c.height},         {"width", c.width}, {"block_size", c.block_size}, {"num_scales", c.num_scales},
          {"seed", c.seed},             {"channel_divisor", c.channel_divisor}};
}

GeneratorConfig config_from(const nlohmann::json& j) {
  GeneratorConfig c;
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  c.block_size = j.at("block_size").get<int>();
  c.num_scales = j.at("num_scales").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.channel_divisor = j.at("channel_divisor").get<int>();
  return c;
}

struct Parsed {
  nlohmann::json header;
  std::string data;
};

Parsed parse(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t prefix = 8 + 4 + 8;
  if (bytes.size() < prefix || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw DataError(path.string() + " is not a checkpoint");
  }
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  std::memcpy(&header_len, bytes.data() + 12, 8);
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  if (header_len > bytes.size() - prefix) throw DataError("truncated checkpoint header");
  Parsed p;
  try {
    p.header = nlohmann::json::parse(bytes.substr(prefix, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  p.data = bytes.substr(prefix + header_len);
  return p;
}

void apply(const Parsed& p, Generator& generator, CriticSet& critics) {
  const auto stored = config_from(p.header.at("architecture"));
  if (!(stored == generator->config())) {
    throw ShapeError("checkpoint architecture " + p.header.at("architecture").dump() + " differs from the model " +
                     config_json(generator->config()).dump());
  }
  std::map<std::string, nlohmann::json> index;
  for (const auto& t : p.header.at("tensors")) index[t.at("name").get<std::string>()] = t;
  auto targets = collect(generator, critics);
  if (index.size() != targets.size()) throw ShapeError("checkpoint tensor count differs from the model");
  torch::NoGradGuard no_grad;
  for (auto& [name, tensor] : targets) {
    auto it = index.find(name);
    if (it == index.end()) throw ShapeError("checkpoint lacks tensor " + name);
    const auto shape = it->second.at("shape").get<std::vector<int64_t>>();
    if (shape != tensor.sizes().vec()) throw ShapeError("checkpoint tensor " + name + " has a different shape");
    const auto offset = it->second.at("offset").get<std::size_t>();
    const auto nbytes = static_cast<std::size_t>(tensor.numel()) * sizeof(float);
    if (offset + nbytes > p.data.size()) throw DataError("truncated checkpoint data for " + name);
    auto src = torch::from_blob(const_cast<char*>(p.data.data() + offset), shape, torch::kFloat);
    tensor.copy_(src);
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Generator& generator, CriticSet& critics, Pathway pathway) {
  auto tensors = collect(generator, critics);
  nlohmann::json index = nlohmann::json::array();
  std::string data;
  for (const auto& [name, tensor] : tensors) {
    auto c = tensor.detach().to(torch::kCPU, torch::kFloat).contiguous();
    index.push_back({{"name", name}, {"shape", c.sizes().vec()}, {"offset", data.size()}, {"dtype", "float32"}});
    data.append(static_cast<const char*>(c.data_ptr()), static_cast<std::size_t>(c.numel()) * sizeof(float));
  }
  nlohmann::json header = {{"architecture", config_json(generator->config())},
                           {"num_critics", critics->num_scales()},
                           {"pathway", to_string(pathway)},
                           {"tensors", index}};
  const auto text = header.dump();
  std::string out(kMagic, 8);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t len = text.size();
  out.append(reinterpret_cast<const char*>(&version), 4);
  out.append(reinterpret_cast<const char*>(&len), 8);
  out += text;
  out += data;
  write_file_atomic(path, out);
}

GeneratorConfig read_checkpoint_config(const std::filesystem::path& path) {
  return config_from(parse(path).header.at("architecture"));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto p = parse(path);
  const auto cfg = config_from(p.header.at("architecture"));
  Checkpoint ck;
  ck.generator = build_generator(cfg);
  ck.critics = build_critics(cfg.num_scales, cfg.height, cfg.width, cfg.seed);
  apply(p, ck.generator, ck.critics);
  ck.pathway = parse_pathway(p.header.value("pathway", std::string("both")));
  return ck;
}

void load_checkpoint_into(const std::filesystem::path& path, Generator& generator, CriticSet& critics) {
  apply(parse(path), generator, critics);
}

}  // namespace n2d::nn
