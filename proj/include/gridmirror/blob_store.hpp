// Copyright 2026 The gridmirror Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace gm {

/// Flat key -> bytes store behind one storage tier. Keys are absolute
/// namespace paths ("/data/cms/a.dat").
class BlobStore {
public:
    virtual ~BlobStore() = default;
    virtual void write(const std::string& key, std::span<const std::uint8_t> data) = 0;
    /// Throws Error(NotFound).
    virtual std::vector<std::uint8_t> read(const std::string& key) const = 0;
    virtual bool remove(const std::string& key) = 0;
    virtual void rename(const std::string& from, const std::string& to) = 0;
    virtual std::vector<std::string> keys() const = 0;
};

class MemoryBlobStore final : public BlobStore {
public:
    void write(const std::string& key, std::span<const std::uint8_t> data) override;
    std::vector<std::uint8_t> read(const std::string& key) const override;
    bool remove(const std::string& key) override;
    void rename(const std::string& from, const std::string& to) override;
    std::vector<std::string> keys() const override;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<std::uint8_t>> blobs_;
};

/// Mirrors keys as files below a base directory.
class DirectoryBlobStore final : public BlobStore {
public:
    explicit DirectoryBlobStore(std::filesystem::path base);
    void write(const std::string& key, std::span<const std::uint8_t> data) override;
    std::vector<std::uint8_t> read(const std::string& key) const override;
    bool remove(const std::string& key) override;
    void rename(const std::string& from, const std::string& to) override;
    std::vector<std::string> keys() const override;

private:
    std::filesystem::path file_for(const std::string& key) const;
    std::filesystem::path base_;
};

}  // namespace gm
