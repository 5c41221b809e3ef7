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

#include "gridmirror/glob.hpp"
#include "gridmirror/names.hpp"
#include "support.hpp"

namespace {

using gm::LogicalFileName;
using gm::PhysicalFileName;

TEST(LogicalFileName, Validity) {
    EXPECT_TRUE(LogicalFileName::is_valid("cms/higgs/run42.dat"));
    EXPECT_TRUE(LogicalFileName::is_valid("a"));
    EXPECT_FALSE(LogicalFileName::is_valid(""));
    EXPECT_FALSE(LogicalFileName::is_valid("/cms/a"));
    EXPECT_FALSE(LogicalFileName::is_valid("cms//a"));
    EXPECT_FALSE(LogicalFileName::is_valid("cms/../a"));
    EXPECT_FALSE(LogicalFileName::is_valid("cms/a b"));
    EXPECT_FALSE(LogicalFileName::is_valid(std::string(257, 'x')));
    EXPECT_TRUE(LogicalFileName::is_valid(std::string(256, 'x')));
    EXPECT_THROW(LogicalFileName("bad name"), gm::Error);
}

TEST(PhysicalFileName, ParseAndPrint) {
    const auto p = PhysicalFileName::parse("gmft://se.cern.ch:9402/storage/cms/a.dat");
    EXPECT_EQ(p.host, "se.cern.ch");
    EXPECT_EQ(p.port, 9402);
    EXPECT_EQ(p.path, "/storage/cms/a.dat");
    EXPECT_EQ(p.str(), "gmft://se.cern.ch:9402/storage/cms/a.dat");
}

TEST(PhysicalFileName, RejectsNonCanonical) {
    for (const char* bad : {"http://h:1/a", "gmft://h/a", "gmft://h:0/a", "gmft://h:70000/a", "gmft://:1/a",
                            "gmft://h:1", "gmft://h:1/", "gmft://h:1/a//b", "gmft://h:1/a/../b", "gmft://h:01/a"}) {
        EXPECT_THROW(PhysicalFileName::parse(bad), gm::Error) << bad;
    }
}

TEST(Names, VoAndPaths) {
    EXPECT_TRUE(gm::is_valid_vo("cms"));
    EXPECT_FALSE(gm::is_valid_vo("CMS"));
    EXPECT_FALSE(gm::is_valid_vo(""));
    EXPECT_TRUE(gm::is_valid_relative_path("a/b.dat"));
    EXPECT_FALSE(gm::is_valid_relative_path("/a"));
    EXPECT_FALSE(gm::is_valid_relative_path("a/"));
    EXPECT_FALSE(gm::is_valid_relative_path("a/./b"));
    EXPECT_EQ(gm::lfn_tail("cms/a/b", "cms"), "a/b");
    EXPECT_EQ(gm::lfn_tail("atlas/a", "cms"), "atlas/a");
    EXPECT_EQ(gm::join_path("/storage/cms", "a/b"), "/storage/cms/a/b");
}

TEST(Names, RootsOverlap) {
    EXPECT_FALSE(gm::roots_overlap({{"cms", "/s/cms"}, {"atlas", "/s/atlas"}}));
    EXPECT_TRUE(gm::roots_overlap({{"cms", "/s/cms"}, {"atlas", "/s/cms/atlas"}}));
    EXPECT_TRUE(gm::roots_overlap({{"cms", "/s"}, {"atlas", "/s"}}));
}

TEST(Names, SuffixPredicateAgreesWithOracle) {
    const std::vector<std::string> segs{"a", "b", "cms", "x.dat", "run1"};
    std::mt19937 rng(5);
    auto random_path = [&](int max) {
        std::string s;
        const int n = 1 + static_cast<int>(rng() % max);
        for (int i = 0; i < n; ++i) s += (i ? "/" : "") + segs[rng() % segs.size()];
        return s;
    };
    for (int i = 0; i < 2000; ++i) {
        const std::string lfn = random_path(3);
        const std::string path = "/" + random_path(5);
        EXPECT_EQ(gm::path_has_lfn_suffix(path, lfn), gmtest::suffix_oracle(path, lfn)) << path << " vs " << lfn;
    }
    EXPECT_FALSE(gm::path_has_lfn_suffix("/data/xcms/a", "cms/a"));
    EXPECT_TRUE(gm::path_has_lfn_suffix("/cms/a", "cms/a"));
}

TEST(Glob, Basics) {
    EXPECT_TRUE(gm::glob_match("cms/*", "cms/a/b.dat"));
    EXPECT_TRUE(gm::glob_match("*.dat", "cms/a.dat"));
    EXPECT_FALSE(gm::glob_match("*.dat", "cms/a.root"));
    EXPECT_TRUE(gm::glob_match("run?", "run1"));
    EXPECT_FALSE(gm::glob_match("run?", "run12"));
    EXPECT_TRUE(gm::glob_match("**", ""));
    EXPECT_EQ(gm::glob_literal_prefix("cms/run*/x"), "cms/run");
}

TEST(Glob, RejectsUnsupportedSyntax) {
    for (const char* bad : {"", "a[bc]", "{a,b}", "a\\*"}) EXPECT_THROW(gm::validate_glob(bad), gm::Error) << bad;
    EXPECT_NO_THROW(gm::validate_glob("cms/*/run?.dat"));
}

TEST(Glob, AgreesWithRegexOracle) {
    const std::string alphabet = "ab/.";
    std::mt19937 rng(11);
    for (int i = 0; i < 5000; ++i) {
        std::string pattern, text;
        for (int k = rng() % 6; k > 0; --k) {
            const int r = rng() % 6;
            pattern += r == 0 ? '*' : r == 1 ? '?' : alphabet[rng() % alphabet.size()];
        }
        for (int k = rng() % 8; k > 0; --k) text += alphabet[rng() % alphabet.size()];
        if (pattern.empty()) continue;
        EXPECT_EQ(gm::glob_match(pattern, text), gmtest::glob_oracle(pattern, text)) << pattern << " / " << text;
    }
}

}  // namespace
