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
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "gridmirror/catalog.hpp"
#include "support.hpp"

namespace {

using gm::Catalog;
using gm::NamingMode;
using gm::PhysicalFileName;

PhysicalFileName pfn(const std::string& host, const std::string& path) { return PhysicalFileName{host, 9402, path}; }

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const gm::Error& e) {
        return e.code();
    }
    return "ok";
}

struct CatalogTest : ::testing::Test {
    gm::ManualClock clock{1000};
    Catalog cat{NamingMode::Free, clock};
};

TEST_F(CatalogTest, RegisterAndGet) {
    const auto r = cat.register_logical("cms/a.dat", 10, 0xABCDu, {{"run", "42"}});
    EXPECT_EQ(r.lfn, "cms/a.dat");
    EXPECT_EQ(r.created_at, 1000);
    EXPECT_EQ(cat.get_logical("cms/a.dat"), r);
    EXPECT_EQ(code_of([&] { cat.get_logical("cms/b.dat"); }), "UnknownLfn");
}

TEST_F(CatalogTest, RegisterIsIdempotentButDetectsConflicts) {
    cat.register_logical("cms/a", 10, 1u);
    clock.advance(5);
    EXPECT_EQ(cat.register_logical("cms/a", 10, 1u).created_at, 1000);
    EXPECT_EQ(code_of([&] { cat.register_logical("cms/a", 11, 1u); }), "AlreadyExistsConflict");
    EXPECT_EQ(code_of([&] { cat.register_logical("cms/a", 10, 2u); }), "AlreadyExistsConflict");
    EXPECT_EQ(code_of([&] { cat.register_logical("/bad", 1, 1u); }), "InvalidName");
}

TEST_F(CatalogTest, ReplicasAreASetSortedByText) {
    cat.register_logical("cms/a", std::nullopt, std::nullopt);
    cat.add_replica("cms/a", pfn("zeta", "/s/cms/a"));
    cat.add_replica("cms/a", pfn("alpha", "/s/cms/a"));
    cat.add_replica("cms/a", pfn("alpha", "/s/cms/a"));
    const auto got = cat.lookup("cms/a");
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].host, "alpha");
    EXPECT_TRUE(cat.remove_replica("cms/a", pfn("alpha", "/s/cms/a")));
    EXPECT_FALSE(cat.remove_replica("cms/a", pfn("alpha", "/s/cms/a")));
    EXPECT_EQ(cat.lookup("cms/a").size(), 1u);
    EXPECT_EQ(code_of([&] { cat.add_replica("cms/zz", pfn("h", "/x")); }), "UnknownLfn");
}

TEST_F(CatalogTest, LastReplicaRemovalKeepsRecord) {
    cat.register_logical("cms/a", 1, 1u);
    cat.add_replica("cms/a", pfn("h", "/s/cms/a"));
    cat.remove_replica("cms/a", pfn("h", "/s/cms/a"));
    EXPECT_TRUE(cat.lookup("cms/a").empty());
    EXPECT_NO_THROW(cat.get_logical("cms/a"));
}

TEST_F(CatalogTest, Attributes) {
    cat.register_logical("cms/a", 1, 1u);
    EXPECT_EQ(cat.set_attribute("cms/a", "owner", "alice").extra.at("owner"), "alice");
    EXPECT_EQ(code_of([&] { cat.set_attribute("cms/a", "bad key", "x"); }), "InvalidKey");
    EXPECT_EQ(code_of([&] { cat.set_attribute("cms/a", "k", std::string(257, 'v')); }), "InvalidValue");
    for (int i = 1; i < 64; ++i) cat.set_attribute("cms/a", "k" + std::to_string(i), "v");
    EXPECT_EQ(code_of([&] { cat.set_attribute("cms/a", "one_more", "v"); }), "TooManyAttributes");
    EXPECT_EQ(code_of([&] { cat.set_attribute("cms/a", "k1", "changed"); }), "ok");
}

TEST_F(CatalogTest, ListByGlob) {
    for (const char* l : {"cms/a.dat", "cms/b.root", "cms/sub/c.dat", "atlas/d.dat"}) cat.register_logical(l, 1, 1u);
    EXPECT_EQ(cat.list_lfns("cms/*.dat", 100), (std::vector<std::string>{"cms/a.dat", "cms/sub/c.dat"}));
    EXPECT_EQ(cat.list_lfns("*", 2).size(), 2u);
    EXPECT_EQ(code_of([&] { cat.list_lfns("cms/[ab]", 10); }), "InvalidPattern");
}

TEST(CatalogStrict, NamingRule) {
    gm::ManualClock clock;
    Catalog cat(NamingMode::Strict, clock);
    cat.register_logical("cms/run1/a.dat", 1, 1u);
    EXPECT_NO_THROW(cat.add_replica("cms/run1/a.dat", pfn("h", "/storage/cms/run1/a.dat")));
    EXPECT_NO_THROW(cat.add_replica("cms/run1/a.dat", pfn("g", "/cms/run1/a.dat")));
    EXPECT_EQ(code_of([&] { cat.add_replica("cms/run1/a.dat", pfn("h2", "/storage/xcms/run1/a.dat")); }),
              "NamingViolation");
    EXPECT_EQ(code_of([&] { cat.add_replica("cms/run1/a.dat", pfn("h3", "/storage/run1/a.dat")); }), "NamingViolation");
}

// Model-based check: random operation sequences against an association list.
TEST(CatalogModel, MatchesAssociationList) {
    gm::ManualClock clock;
    Catalog cat(NamingMode::Free, clock);
    std::map<std::string, std::set<std::string>> model;
    std::mt19937 rng(2024);
    const std::vector<std::string> lfns{"cms/a", "cms/b", "cms/c", "atlas/d"};
    const std::vector<std::string> hosts{"h1", "h2", "h3"};
    for (int i = 0; i < 5000; ++i) {
        const std::string& l = lfns[rng() % lfns.size()];
        const auto p = pfn(hosts[rng() % hosts.size()], "/s/" + l);
        switch (rng() % 4) {
        case 0:
            cat.register_logical(l, std::nullopt, std::nullopt);
            model[l];
            break;
        case 1: {
            const std::string got = code_of([&] { cat.add_replica(l, p); });
            if (model.contains(l)) {
                ASSERT_EQ(got, "ok");
                model[l].insert(p.str());
            } else {
                ASSERT_EQ(got, "UnknownLfn");
            }
            break;
        }
        case 2: {
            bool removed = false;
            const std::string got = code_of([&] { removed = cat.remove_replica(l, p); });
            if (model.contains(l)) {
                ASSERT_EQ(got, "ok");
                ASSERT_EQ(removed, model[l].erase(p.str()) > 0);
            } else {
                ASSERT_EQ(got, "UnknownLfn");
            }
            break;
        }
        default: {
            std::vector<gm::PhysicalFileName> got;
            const std::string code = code_of([&] { got = cat.lookup(l); });
            if (!model.contains(l)) {
                ASSERT_EQ(code, "UnknownLfn");
                break;
            }
            std::vector<std::string> texts;
            for (const auto& g : got) texts.push_back(g.str());
            ASSERT_EQ(texts, std::vector<std::string>(model[l].begin(), model[l].end()));
        }
        }
    }
    EXPECT_EQ(cat.size(), model.size());
}

TEST(CatalogSnapshot, RoundTripAndCorruption) {
    gm::ManualClock clock(5);
    Catalog cat(NamingMode::Free, clock);
    cat.register_logical("cms/a", 100, 7u, {{"k", "v"}});
    cat.add_replica("cms/a", pfn("h1", "/s/cms/a"));
    cat.register_logical("cms/b", std::nullopt, std::nullopt);
    const auto dir = std::filesystem::temp_directory_path() / ("gm-snap-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto path = dir / "cat.snap";
    cat.snapshot_save(path);

    Catalog copy(NamingMode::Free, clock);
    copy.snapshot_load(path);
    EXPECT_EQ(copy.get_logical("cms/a"), cat.get_logical("cms/a"));
    EXPECT_EQ(copy.get_logical("cms/b"), cat.get_logical("cms/b"));
    EXPECT_EQ(copy.replicas("cms/a"), cat.replicas("cms/a"));
    EXPECT_EQ(copy.encode_snapshot(), cat.encode_snapshot());

    // Flip one byte anywhere: load must fail and leave the state alone.
    auto bytes = cat.encode_snapshot();
    for (std::size_t i = 0; i < bytes.size(); i += 7) {
        auto bad = bytes;
        bad[i] ^= 0x01;
        EXPECT_EQ(code_of([&] { copy.decode_snapshot(bad); }), "CorruptSnapshot") << "byte " << i;
    }
    EXPECT_EQ(copy.size(), 2u);
    EXPECT_EQ(code_of([&] { copy.snapshot_load(dir / "missing"); }), "IoFailure");
    std::filesystem::remove_all(dir);
}

TEST(CatalogConcurrency, ParallelWritersAreLinearizable) {
    gm::ManualClock clock;
    Catalog cat(NamingMode::Free, clock);
    cat.register_logical("cms/shared", 1, 1u);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 200; ++i) {
                cat.register_logical("cms/t" + std::to_string(t) + "/" + std::to_string(i), 1, 1u);
                cat.add_replica("cms/shared", pfn("h" + std::to_string(t), "/s/" + std::to_string(i)));
                cat.lookup("cms/shared");
            }
        });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(cat.size(), 1u + 8 * 200);
    EXPECT_EQ(cat.lookup("cms/shared").size(), 8u * 200);
}

}  // namespace
