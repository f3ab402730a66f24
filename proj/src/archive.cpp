// Copyright (C) 2026 The reenact authors
// SPDX-License-Identifier: Apache-2.0
//
#include "reenact/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "reenact/errors.hpp"

namespace reenact {
namespace {

static_assert(std::endian::native == std::endian::little,
              "archive payloads are written in host order, which must be little-endian");

constexpr char kMagic[8] = {'R', 'N', 'T', 'A', 'R', 'C', 'H', '1'};

}  // namespace

void write_archive(const std::filesystem::path& path, const TensorMap& tensors) {
  nlohmann::ordered_json manifest;
  auto list = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    const std::uint64_t nbytes = t.size() * sizeof(double);
    list.push_back({{"name", name},
                    {"dtype", "float64"},
                    {"shape", t.shape()},
                    {"offset", offset},
                    {"nbytes", nbytes}});
    offset += nbytes;
  }
  manifest["tensors"] = std::move(list);
  const std::string header = manifest.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write archive " + path.string());
  const std::uint64_t len = header.size();
  os.write(kMagic, sizeof kMagic);
  os.write(reinterpret_cast<const char*>(&len), sizeof len);
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [_, t] : tensors) {
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw IoError("short write to " + path.string());
}

TensorMap read_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open archive " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  is.read(magic, sizeof magic);
  is.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IoError(path.string() + " is not a tensor archive");
  }
  std::string header(len, '\0');
  is.read(header.data(), static_cast<std::streamsize>(len));
  std::vector<char> payload((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (!is.eof() && !is) throw IoError("truncated archive " + path.string());

  TensorMap out;
  try {
    const auto manifest = nlohmann::json::parse(header);
    for (const auto& e : manifest.at("tensors")) {
      if (e.at("dtype").get<std::string>() != "float64") {
        throw IoError("unsupported dtype in " + path.string());
      }
      Shape shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto nbytes = e.at("nbytes").get<std::uint64_t>();
      if (nbytes != shape_numel(shape) * sizeof(double) || offset + nbytes > payload.size()) {
        throw IoError("inconsistent entry '" + e.at("name").get<std::string>() + "' in " +
                      path.string());
      }
      std::vector<double> values(shape_numel(shape));
      std::memcpy(values.data(), payload.data() + offset, nbytes);
      out.emplace(e.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed archive manifest in " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace reenact
