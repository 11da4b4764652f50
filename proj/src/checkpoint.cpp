#include "spinex/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace spinex {

using nlohmann::json;

namespace {
constexpr char kMagic[4] = {'S', 'X', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void save_checkpoint(const std::string& path, const NetParams& params) {
  params.validate();
  json header;
  header["spec"] = {{"depth", params.spec.depth},
                    {"base_channels", params.spec.base_channels},
                    {"fusion_beta", params.spec.fusion_beta},
                    {"activation_slope", params.spec.activation_slope}};
  header["spec_hash"] = params.spec_hash;
  header["meta"] = {{"iteration", params.iteration}, {"epoch", params.epoch}, {"seed", params.seed}};
  header["tensors"] = json::array();
  for (const auto& t : params.tensors) {
    header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"count", t.data.size()}});
  }
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  const std::uint32_t ver = kVersion;
  out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  const std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& t : params.tensors) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

NetParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint not found: " + path);
  char magic[4];
  std::uint32_t ver = 0;
  std::uint64_t hlen = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": not a checkpoint file");
  }
  if (ver != kVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(ver));
  }
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": corrupt checkpoint header: " + e.what());
  }

  NetParams p;
  p.spec.depth = header.at("spec").at("depth").get<int>();
  p.spec.base_channels = header.at("spec").at("base_channels").get<int>();
  p.spec.fusion_beta = header.at("spec").at("fusion_beta").get<double>();
  p.spec.activation_slope = header.at("spec").at("activation_slope").get<double>();
  p.spec_hash = header.at("spec_hash").get<std::uint64_t>();
  p.iteration = header.at("meta").at("iteration").get<int>();
  p.epoch = header.at("meta").at("epoch").get<int>();
  p.seed = header.at("meta").at("seed").get<std::uint64_t>();

  for (const auto& td : header.at("tensors")) {
    NamedTensor t;
    t.name = td.at("name").get<std::string>();
    t.shape = td.at("shape").get<std::vector<int>>();
    t.data.resize(td.at("count").get<std::size_t>());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    p.tensors.push_back(std::move(t));
  }
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  p.validate();
  return p;
}

} // namespace spinex
