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

#include <gtest/gtest.h>

#include <filesystem>

#include "gridmirror/crc32.hpp"
#include "gridmirror/info_service.hpp"
#include "gridmirror/sim.hpp"
#include "gridmirror/storage_element.hpp"
#include "support.hpp"

namespace {

using gm::SeConfig;
using gm::StorageElement;

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const gm::Error& e) {
        return e.code();
    }
    return "ok";
}

SeConfig config(const std::string& host, std::uint64_t capacity = 1 << 20) {
    SeConfig c;
    c.host = host;
    c.port = 9402;
    c.vo_roots = {{"cms", "/storage/cms"}, {"atlas", "/storage/atlas"}};
    c.disk_capacity = capacity;
    c.mss_stage_latency_ms = 100;
    c.token = "t";
    return c;
}

struct SeTest : ::testing::Test {
    gm::ManualClock clock;
    gm::sim::SimNet net{clock, 1};
    StorageElement a{config("a"), std::make_unique<gm::MemoryBlobStore>(), std::make_unique<gm::MemoryBlobStore>(), clock,
                     net.endpoint("a")};
    StorageElement b{config("b", 3000), std::make_unique<gm::MemoryBlobStore>(),
                     std::make_unique<gm::MemoryBlobStore>(), clock, net.endpoint("b")};
    gm::SeService sa{a}, sb{b};

    void SetUp() override {
        net.attach("a", {"a", 9402}, sa);
        net.attach("b", {"b", 9402}, sb);
    }
};

TEST_F(SeTest, PutGetStat) {
    const auto data = gmtest::random_bytes(500, 1);
    const auto o = a.put_file("cms", "x/y.dat", data);
    EXPECT_EQ(o.size, 500u);
    EXPECT_EQ(o.crc32, gmtest::crc32_bitwise(data));
    EXPECT_EQ(o.tiers, (gm::TierSet{true, false}));
    EXPECT_EQ(a.get_file("cms", "x/y.dat"), data);
    EXPECT_EQ(a.stat("cms", "x/y.dat"), o);
    EXPECT_EQ(a.disk_used(), 500u);
    EXPECT_EQ(code_of([&] { a.put_file("cms", "x/y.dat", data); }), "AlreadyExists");
    EXPECT_EQ(code_of([&] { a.put_file("lhcb", "x", data); }), "UnknownVo");
    EXPECT_EQ(code_of([&] { a.put_file("cms", "../x", data); }), "InvalidName");
    EXPECT_EQ(code_of([&] { a.get_file("cms", "nope"); }), "NotFound");
}

TEST_F(SeTest, VoNamespacesAreSeparate) {
    a.put_file("cms", "f", gmtest::random_bytes(10, 1));
    EXPECT_EQ(code_of([&] { a.stat("atlas", "f"); }), "NotFound");
    EXPECT_TRUE(a.list_dir("atlas", "").empty());
    EXPECT_EQ(a.list_dir("cms", "").size(), 1u);
}

TEST_F(SeTest, DiskCapacity) {
    EXPECT_EQ(code_of([&] { b.put_file("cms", "big", gmtest::random_bytes(3001, 1)); }), "DiskFull");
    EXPECT_EQ(code_of([&] { b.put_file("cms", "fits", gmtest::random_bytes(3000, 1)); }), "ok");
    b.remove("cms", "fits");
    EXPECT_EQ(b.disk_used(), 0u);
}

TEST_F(SeTest, MssTiering) {
    const auto data = gmtest::random_bytes(100, 2);
    a.put_file("cms", "f", data);
    EXPECT_EQ(code_of([&] { a.evict_to_mss("cms", "f"); }), "NotArchived");
    const gm::TimeMs t0 = clock.now();
    EXPECT_EQ(a.stage_to_mss("cms", "f").tiers, (gm::TierSet{true, true}));
    EXPECT_EQ(clock.now() - t0, 100);
    EXPECT_EQ(a.evict_to_mss("cms", "f").tiers, (gm::TierSet{false, true}));
    EXPECT_EQ(a.disk_used(), 0u);
    EXPECT_EQ(code_of([&] { a.get_file("cms", "f"); }), "NotStaged");
    EXPECT_EQ(a.stage_from_mss("cms", "f").tiers, (gm::TierSet{true, true}));
    EXPECT_EQ(a.get_file("cms", "f"), data);
    a.remove("cms", "f");
    EXPECT_EQ(code_of([&] { a.stat("cms", "f"); }), "NotFound");
}

TEST_F(SeTest, ThirdPartyTransfer) {
    const auto data = gmtest::random_bytes(1000, 3);
    a.put_file("cms", "f", data);
    const auto r = gm::third_party_transfer(net.endpoint("ui"), "t", {"a", 9402}, "cms", "f", {"b", 9402}, "cms", "g");
    EXPECT_EQ(r.bytes, 1000u);
    EXPECT_EQ(r.crc32, gm::crc32(data));
    EXPECT_EQ(b.get_file("cms", "g"), data);
    EXPECT_EQ(a.stats().transfers_out, 1u);
    EXPECT_EQ(b.stats().transfers_in, 1u);
}

TEST_F(SeTest, CorruptedFrameIsRejectedAndInvisible) {
    a.put_file("cms", "f", gmtest::random_bytes(1000, 4));
    net.inject("a", "b", gm::sim::Channel::Data, {gm::sim::Fault::Corrupt});
    EXPECT_EQ(code_of([&] {
                  gm::third_party_transfer(net.endpoint("ui"), "t", {"a", 9402}, "cms", "f", {"b", 9402}, "cms", "f");
              }),
              "ChecksumMismatch");
    EXPECT_TRUE(b.list_dir("cms", "").empty());
    EXPECT_EQ(b.stats().checksum_failures, 1u);
    EXPECT_EQ(b.disk_used(), 0u);
    // A retry after the fault succeeds.
    EXPECT_EQ(code_of([&] {
                  gm::third_party_transfer(net.endpoint("ui"), "t", {"a", 9402}, "cms", "f", {"b", 9402}, "cms", "f");
              }),
              "ok");
}

TEST_F(SeTest, TransferErrors) {
    a.put_file("cms", "big", gmtest::random_bytes(5000, 5));
    EXPECT_EQ(code_of([&] {
                  gm::third_party_transfer(net.endpoint("ui"), "t", {"a", 9402}, "cms", "big", {"b", 9402}, "cms", "big");
              }),
              "DestinationDiskFull");
    net.set_node_down("a", true);
    EXPECT_EQ(code_of([&] {
                  gm::third_party_transfer(net.endpoint("ui"), "t", {"a", 9402}, "cms", "big", {"b", 9402}, "cms", "x");
              }),
              "SourceUnreachable");
    net.set_node_down("a", false);
    net.inject("a", "b", gm::sim::Channel::Data, {gm::sim::Fault::Fail});
    a.put_file("cms", "small", gmtest::random_bytes(10, 5));
    EXPECT_EQ(code_of([&] {
                  gm::third_party_transfer(net.endpoint("ui"), "t", {"a", 9402}, "cms", "small", {"b", 9402}, "cms", "s");
              }),
              "TransferFailed");
    EXPECT_TRUE(b.list_dir("cms", "").empty());
}

TEST_F(SeTest, FramesNeedAReservation) {
    const auto data = gmtest::random_bytes(10, 6);
    const auto frame = gm::encode_frame("cms/f", gm::crc32(data), data);
    EXPECT_EQ(sb.handle_frame(frame), gm::kFrameRejected);
    EXPECT_EQ(b.open_transfer("cms", "f", 10), "cms/f");
    EXPECT_EQ(sb.handle_frame(frame), gm::kFrameOk);
    EXPECT_EQ(sb.handle_frame(frame), gm::kFrameRejected);  // reservation consumed
}

TEST_F(SeTest, ClientUploadAndWrongToken) {
    gm::SeClient good(net.endpoint("ui"), {"b", 9402}, "t");
    const auto data = gmtest::random_bytes(100, 7);
    EXPECT_EQ(good.upload("cms", "u", data).crc32, gm::crc32(data));
    EXPECT_EQ(good.get("cms", "u"), data);
    gm::SeClient bad(net.endpoint("ui"), {"b", 9402}, "wrong");
    EXPECT_EQ(code_of([&] { bad.stat("cms", "u"); }), "Unauthorized");
}

TEST(SeRecovery, DirectoryStoreSurvivesRestartAndDropsPartials) {
    const auto dir = std::filesystem::temp_directory_path() / ("gm-se-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    gm::ManualClock clock;
    gm::sim::SimNet net(clock, 1);
    const auto data = gmtest::random_bytes(300, 8);
    {
        StorageElement se(config("a"), std::make_unique<gm::DirectoryBlobStore>(dir / "disk"),
                          std::make_unique<gm::DirectoryBlobStore>(dir / "mss"), clock, net.endpoint("a"));
        se.put_file("cms", "d/f", data);
        se.stage_to_mss("cms", "d/f");
        se.put_file("atlas", "g", data);
        gm::DirectoryBlobStore(dir / "disk").write("/.partial/99", data);
    }
    StorageElement se(config("a"), std::make_unique<gm::DirectoryBlobStore>(dir / "disk"),
                      std::make_unique<gm::DirectoryBlobStore>(dir / "mss"), clock, net.endpoint("a"));
    se.recover();
    EXPECT_EQ(se.stat("cms", "d/f").tiers, (gm::TierSet{true, true}));
    EXPECT_EQ(se.get_file("atlas", "g"), data);
    EXPECT_EQ(se.disk_used(), 600u);
    for (const auto& k : gm::DirectoryBlobStore(dir / "disk").keys()) EXPECT_FALSE(k.starts_with("/.partial")) << k;
    std::filesystem::remove_all(dir);
}

TEST(SeConfigTest, Validation) {
    auto c = config("a");
    EXPECT_NO_THROW(c.validate());
    c.vo_roots = {{"cms", "/s"}, {"atlas", "/s/atlas"}};
    EXPECT_EQ(code_of([&] { c.validate(); }), "InvalidConfig");
    c = config("a");
    c.vo_roots = {{"cms", "relative"}};
    EXPECT_EQ(code_of([&] { c.validate(); }), "InvalidConfig");
    EXPECT_EQ(code_of([&] { SeConfig::from_json(gm::json{{"host", "a"}}); }), "InvalidConfig");
}

TEST(InfoServiceTest, AdvertiseResolveList) {
    gm::ManualClock clock;
    gm::InfoService info(clock, 1000);
    info.advertise("se.b", 9402, {{"cms", "/b/cms"}});
    info.advertise("se.a", 9402, {{"cms", "/a/cms"}, {"atlas", "/a/atlas"}});
    EXPECT_EQ(info.resolve("se.a", "atlas").root, "/a/atlas");
    EXPECT_EQ(info.list_ses("cms"), (std::vector<std::string>{"se.a", "se.b"}));
    EXPECT_EQ(code_of([&] { info.resolve("se.b", "atlas"); }), "VoNotSupported");
    EXPECT_EQ(code_of([&] { info.resolve("se.zz", "cms"); }), "UnknownSe");
    info.advertise("se.b", 9500, {{"cms", "/b2/cms"}});
    EXPECT_EQ(info.resolve("se.b", "cms").port, 9500);
    EXPECT_EQ(code_of([&] { info.advertise("se.c", 1, {{"cms", "rel"}}); }), "InvalidAdvertisement");
    EXPECT_EQ(code_of([&] { info.advertise("se.c", 1, {{"cms", "/x"}, {"atlas", "/x/y"}}); }), "InvalidAdvertisement");
    clock.advance(1500);
    info.advertise("se.a", 9402, {{"cms", "/a/cms"}});
    EXPECT_EQ(info.list_ses("cms"), (std::vector<std::string>{"se.a"}));
    EXPECT_EQ(info.resolve("se.b", "cms").root, "/b2/cms");  // stale but still resolvable
}

}  // namespace
