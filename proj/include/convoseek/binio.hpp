/*
 * Copyright 2026 The ConvoSeek Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "convoseek/types.hpp"

// Little-endian float32 tensor files shared by the model artifacts.
namespace convoseek::binio {

static_assert(std::endian::native == std::endian::little,
              "model files are written in host order; add byte swapping for big-endian hosts");

using Magic = std::array<char, 4>;

class Writer {
 public:
  Writer(const std::filesystem::path& path, const Magic& magic) : path_(path) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw InputError("cannot write " + path.string());
    out_.write(magic.data(), magic.size());
  }

  void u32(std::uint32_t value) { out_.write(reinterpret_cast<const char*>(&value), sizeof value); }

  template <typename Derived>
  void tensor(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        auto value = static_cast<float>(m(r, c));
        out_.write(reinterpret_cast<const char*>(&value), sizeof value);
      }
    }
  }

  void finish() {
    out_.flush();
    if (!out_) throw RuntimeFailure("write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  Reader(const std::filesystem::path& path, const Magic& magic) : path_(path) {
    in_.open(path, std::ios::binary);
    if (!in_) throw InputError("cannot open " + path.string());
    Magic found{};
    in_.read(found.data(), found.size());
    if (!in_ || found != magic) {
      throw InputError(path.string() + ": bad magic, expected " + std::string(magic.data(), 4));
    }
  }

  std::uint32_t u32() {
    std::uint32_t value = 0;
    in_.read(reinterpret_cast<char*>(&value), sizeof value);
    check();
    return value;
  }

  template <typename Derived>
  void tensor(Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        float value = 0.0f;
        in_.read(reinterpret_cast<char*>(&value), sizeof value);
        check();
        m(r, c) = static_cast<double>(value);
      }
    }
  }

  void expect_end() {
    in_.peek();
    if (!in_.eof()) throw InputError(path_.string() + ": trailing bytes");
  }

 private:
  void check() {
    if (!in_) throw InputError(path_.string() + ": truncated file");
  }

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace convoseek::binio
