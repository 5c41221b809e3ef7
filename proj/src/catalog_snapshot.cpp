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

// Snapshot file:
//   "GMRC" | version u8 | body | crc32(body) u32
//   body  = record_count u64 | { block_len u32 | block }*
//   block = lfn str | flags u8 | size u64 | crc32 u32 | created_at i64
//           | extra_count u16 | { key str | value str }*
//           | replica_count u32 | { pfn str | registered_at i64 }*
//   str   = len u16 | bytes
// Integers are little-endian.

#include <cstring>
#include <fstream>
#include <iterator>
#include <mutex>

#include "gridmirror/catalog.hpp"
#include "gridmirror/crc32.hpp"

namespace gm {
namespace {

constexpr char kMagic[4] = {'G', 'M', 'R', 'C'};

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
    void str(std::string_view s) {
        u16(static_cast<std::uint16_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    std::vector<std::uint8_t>& buffer() { return out_; }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
    std::string str() {
        const std::size_t n = u16();
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw Error(errc::kCorruptSnapshot, "snapshot truncated");
    }
    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> Catalog::encode_snapshot() const {
    Writer body;
    {
        std::shared_lock lock(mutex_);
        body.u64(entries_.size());
        for (const auto& [lfn, entry] : entries_) {
            Writer block;
            const LogicalFileRecord& r = entry.record;
            block.str(lfn);
            block.u8(static_cast<std::uint8_t>((r.size ? 1 : 0) | (r.crc32 ? 2 : 0)));
            block.u64(r.size.value_or(0));
            block.u32(r.crc32.value_or(0));
            block.i64(r.created_at);
            block.u16(static_cast<std::uint16_t>(r.extra.size()));
            for (const auto& [k, v] : r.extra) {
                block.str(k);
                block.str(v);
            }
            block.u32(static_cast<std::uint32_t>(entry.replicas.size()));
            for (const auto& [text, replica] : entry.replicas) {
                block.str(text);
                block.i64(replica.registered_at);
            }
            body.u32(static_cast<std::uint32_t>(block.buffer().size()));
            body.bytes(block.buffer());
        }
    }
    Writer file;
    file.bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
    file.u8(kSnapshotVersion);
    file.bytes(body.buffer());
    file.u32(crc32(body.buffer()));
    return std::move(file.buffer());
}

void Catalog::decode_snapshot(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 + 1 + 8 + 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw Error(errc::kCorruptSnapshot, "not a catalogue snapshot (bad magic or too short)");
    if (bytes[4] != kSnapshotVersion)
        throw Error(errc::kCorruptSnapshot, "unsupported snapshot version " + std::to_string(bytes[4]));
    const auto body = bytes.subspan(5, bytes.size() - 5 - 4);
    Reader trailer(bytes.subspan(bytes.size() - 4));
    if (trailer.u32() != crc32(body)) throw Error(errc::kCorruptSnapshot, "snapshot checksum mismatch");

    EntryMap loaded;
    try {
        Reader in(body);
        const std::uint64_t count = in.u64();
        for (std::uint64_t i = 0; i < count; ++i) {
            Reader block(in.take(in.u32()));
            Entry entry;
            LogicalFileRecord& r = entry.record;
            r.lfn = block.str();
            if (!LogicalFileName::is_valid(r.lfn)) throw Error(errc::kCorruptSnapshot, "invalid LFN in snapshot");
            const std::uint8_t flags = block.u8();
            const std::uint64_t size = block.u64();
            const std::uint32_t crc = block.u32();
            if (flags & 1) r.size = size;
            if (flags & 2) r.crc32 = crc;
            r.created_at = block.i64();
            for (std::uint16_t k = block.u16(); k > 0; --k) {
                std::string key = block.str();
                r.extra[key] = block.str();
            }
            for (std::uint32_t n = block.u32(); n > 0; --n) {
                std::string text = block.str();
                ReplicaEntry replica;
                replica.lfn = r.lfn;
                replica.pfn = PhysicalFileName::parse(text);
                replica.se_host = replica.pfn.host;
                replica.registered_at = block.i64();
                entry.replicas.emplace(std::move(text), std::move(replica));
            }
            if (!block.done()) throw Error(errc::kCorruptSnapshot, "trailing bytes in snapshot record");
            const std::string key = r.lfn;
            if (!loaded.emplace(key, std::move(entry)).second)
                throw Error(errc::kCorruptSnapshot, "duplicate LFN in snapshot");
        }
        if (!in.done()) throw Error(errc::kCorruptSnapshot, "trailing bytes in snapshot body");
    } catch (const Error& e) {
        if (e.code() == errc::kCorruptSnapshot) throw;
        throw Error(errc::kCorruptSnapshot, std::string("snapshot content invalid: ") + e.what());
    }
    std::unique_lock lock(mutex_);
    entries_.swap(loaded);
}

void Catalog::snapshot_save(const std::filesystem::path& path) const {
    const auto bytes = encode_snapshot();
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(errc::kIoFailure, "cannot write snapshot " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(errc::kIoFailure, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(errc::kIoFailure, "cannot move snapshot into place: " + ec.message());
}

void Catalog::snapshot_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::kIoFailure, "cannot read snapshot " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    decode_snapshot(bytes);
}

}  // namespace gm
