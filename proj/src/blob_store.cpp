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

#include "gridmirror/blob_store.hpp"

#include <fstream>
#include <iterator>

#include "gridmirror/error.hpp"

namespace gm {

void MemoryBlobStore::write(const std::string& key, std::span<const std::uint8_t> data) {
    std::lock_guard lock(mutex_);
    blobs_[key].assign(data.begin(), data.end());
}

std::vector<std::uint8_t> MemoryBlobStore::read(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = blobs_.find(key);
    if (it == blobs_.end()) throw Error(errc::kNotFound, "no blob " + key);
    return it->second;
}

bool MemoryBlobStore::remove(const std::string& key) {
    std::lock_guard lock(mutex_);
    return blobs_.erase(key) > 0;
}

void MemoryBlobStore::rename(const std::string& from, const std::string& to) {
    std::lock_guard lock(mutex_);
    auto node = blobs_.extract(from);
    if (node.empty()) throw Error(errc::kNotFound, "no blob " + from);
    node.key() = to;
    blobs_.insert_or_assign(to, std::move(node.mapped()));
}

std::vector<std::string> MemoryBlobStore::keys() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [k, _] : blobs_) out.push_back(k);
    return out;
}

DirectoryBlobStore::DirectoryBlobStore(std::filesystem::path base) : base_(std::move(base)) {
    std::error_code ec;
    std::filesystem::create_directories(base_, ec);
    if (ec) throw Error(errc::kIoFailure, "cannot create " + base_.string() + ": " + ec.message());
}

std::filesystem::path DirectoryBlobStore::file_for(const std::string& key) const {
    return base_ / std::filesystem::path(key).relative_path();
}

void DirectoryBlobStore::write(const std::string& key, std::span<const std::uint8_t> data) {
    const auto file = file_for(key);
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(errc::kIoFailure, "write failed: " + file.string());
}

std::vector<std::uint8_t> DirectoryBlobStore::read(const std::string& key) const {
    std::ifstream in(file_for(key), std::ios::binary);
    if (!in) throw Error(errc::kNotFound, "no blob " + key);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool DirectoryBlobStore::remove(const std::string& key) {
    std::error_code ec;
    return std::filesystem::remove(file_for(key), ec);
}

void DirectoryBlobStore::rename(const std::string& from, const std::string& to) {
    const auto target = file_for(to);
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
    std::filesystem::rename(file_for(from), target, ec);
    if (ec) throw Error(errc::kIoFailure, "rename " + from + " -> " + to + ": " + ec.message());
}

std::vector<std::string> DirectoryBlobStore::keys() const {
    std::vector<std::string> out;
    std::error_code ec;
    for (auto it = std::filesystem::recursive_directory_iterator(base_, ec);
         !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
        if (it->is_regular_file()) out.push_back("/" + std::filesystem::relative(it->path(), base_).generic_string());
    }
    return out;
}

}  // namespace gm
