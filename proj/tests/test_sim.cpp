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

#include <fstream>

#include "gridmirror/sim.hpp"
#include "support.hpp"

namespace {

using gm::json;
using gm::sim::Harness;
using gm::sim::Scenario;
using gm::sim::Topology;

json load(const std::string& name) {
    std::ifstream in(std::string(GM_SCENARIO_DIR) + "/" + name);
    return json::parse(in);
}

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const gm::Error& e) {
        return e.code();
    }
    return "ok";
}

/// Fermilab exports `files`; every site in `subscribers` mirrors it.
json replication_scenario(const std::vector<std::string>& subscribers, int files = 3, json expect = json::array()) {
    json steps = json::array();
    for (const auto& s : subscribers)
        steps.push_back({{"at", 0}, {"actor", s}, {"action", "mirror.subscribe"}, {"args", {{"remote", "fermilab"}, {"vo", "cms"}}}});
    for (int i = 0; i < files; ++i) {
        const std::string path = "run/f" + std::to_string(i) + ".dat";
        steps.push_back({{"at", 1000}, {"actor", "fermilab"}, {"action", "se.put"},
                         {"args", {{"vo", "cms"}, {"path", path}, {"random_bytes", 20000}, {"content_seed", i + 1}}}});
    }
    for (int i = 0; i < files; ++i) {
        const std::string path = "run/f" + std::to_string(i) + ".dat";
        steps.push_back({{"at", 2000}, {"actor", "fermilab"}, {"action", "mirror.register_local_file"},
                         {"args", {{"vo", "cms"}, {"path", path}}}});
    }
    steps.push_back({{"at", 3000}, {"actor", "fermilab"}, {"action", "mirror.publish_catalogue"}, {"args", {{"vo", "cms"}}}});
    steps.push_back({{"at", 3000}, {"actor", "ui"}, {"action", "harness.drain"}, {"args", json::object()}});
    return json{{"steps", steps}, {"expect", expect}};
}

json four_sites(json extra = json::object(), json daemon = json::object()) {
    json sites = json::array();
    for (const char* n : {"cern", "fermilab", "italy", "france"}) sites.push_back(gmtest::site_json(n, {"cms"}, daemon));
    extra["sites"] = sites;
    if (!extra.contains("seed")) extra["seed"] = 1;
    return extra;
}

TEST(Sim, FourSiteScenarioFilePasses) {
    const json report = gm::sim::run(Topology::from_json(load("four_site_topology.json")),
                                     Scenario::from_json(load("four_site_scenario.json")));
    EXPECT_TRUE(report["passed"].get<bool>()) << report["first_failure"];
    for (const auto& x : report["expectations"]) EXPECT_TRUE(x["passed"].get<bool>()) << x.dump();
}

TEST(Sim, CernHoldsCrcMatchingCopiesAndTwoPfnsEach) {
    const json expect = json::array({{{"kind", "replica_count"}, {"site", "cern"}, {"vo", "cms"}, {"equals", 3}, {"verify_crc", true}},
                                     {{"kind", "pfn_count"}, {"lfn_glob", "cms/*"}, {"equals", 2}},
                                     {{"kind", "converged"}}});
    Harness h(Topology::from_json(four_sites()));
    const json report = h.run(Scenario::from_json(replication_scenario({"cern"}, 3, expect)));
    ASSERT_TRUE(report["passed"].get<bool>()) << report["first_failure"];
    for (int i = 0; i < 3; ++i) {
        const std::string path = "run/f" + std::to_string(i) + ".dat";
        const auto pfns = h.catalog().lookup("cms/" + path);
        ASSERT_EQ(pfns.size(), 2u);
        EXPECT_EQ(pfns[0].host, "cern.grid");
        EXPECT_EQ(pfns[1].host, "fermilab.grid");
        const auto want = gmtest::crc32_bitwise(gmtest::random_bytes(20000, i + 1));
        EXPECT_EQ(h.se("cern").stat("cms", path).crc32, want);
    }
    EXPECT_TRUE(h.se("italy").list_dir("cms", "").empty());
}

TEST(Sim, RunIsReproducible) {
    json topo = four_sites({{"default_link", {{"latency_ms", 15}, {"fail_probability", 0.2}}}}, {{"max_attempts", 10}});
    const auto scenario = Scenario::from_json(replication_scenario({"cern", "italy", "france"}, 4));
    const json a = gm::sim::run(Topology::from_json(topo), scenario);
    const json b = gm::sim::run(Topology::from_json(topo), scenario);
    EXPECT_EQ(a.dump(), b.dump());
    EXPECT_GT(a["net"]["draws"].get<int>(), 0);
}

TEST(Sim, SeedIsIrrelevantWithoutFaults) {
    const auto scenario = Scenario::from_json(replication_scenario({"cern", "italy"}));
    std::set<std::string> digests;
    for (std::uint64_t seed : {1u, 2u, 99u, 123456u}) {
        const json r = gm::sim::run(Topology::from_json(four_sites({{"seed", seed}})), scenario);
        EXPECT_EQ(r["net"]["draws"], 0);
        digests.insert(r["final_state_digest"].get<std::string>());
    }
    EXPECT_EQ(digests.size(), 1u);
}

TEST(Sim, RecoverableFaultsReachTheFaultFreeState) {
    const auto scenario = Scenario::from_json(replication_scenario({"cern", "italy", "france"}, 3,
                                                                   json::array({{{"kind", "converged"}}})));
    const std::string clean =
        gm::sim::run(Topology::from_json(four_sites({}, {{"max_attempts", 12}})), scenario)["final_state_digest"];
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const json topo = four_sites({{"seed", seed}, {"default_link", {{"fail_probability", 0.25}, {"corrupt_probability", 0.15}}}},
                                     {{"max_attempts", 12}});
        const json r = gm::sim::run(Topology::from_json(topo), scenario);
        EXPECT_TRUE(r["passed"].get<bool>()) << "seed " << seed << ": " << r["first_failure"];
        EXPECT_EQ(r["final_state_digest"], clean) << "seed " << seed;
        EXPECT_GT(r["net"]["lost"].get<int>() + r["net"]["corrupted"].get<int>(), 0);
    }
}

TEST(Sim, TotalFailureDeadLettersEverything) {
    const json expect = json::array({{{"kind", "replica_count"}, {"site", "cern"}, {"vo", "cms"}, {"equals", 0}},
                                     {{"kind", "dead_letter_count"}, {"site", "cern"}, {"vo", "cms"}, {"equals", 3}}});
    Harness h(Topology::from_json(four_sites({{"default_link", {{"fail_probability", 1.0}}}})));
    const json report = h.run(Scenario::from_json(replication_scenario({"cern"}, 3, expect)));
    EXPECT_TRUE(report["passed"].get<bool>()) << report["first_failure"];
    EXPECT_EQ(h.daemon("cern").dead_letters("cms").size(), 3u);
    EXPECT_TRUE(h.se("cern").list_dir("cms", "").empty());
    for (const auto& lfn : h.catalog().list_lfns("cms/*", 100)) EXPECT_EQ(h.catalog().lookup(lfn).size(), 1u);
    EXPECT_FALSE(h.converged().converged);
}

TEST(Sim, StepsNeverRunEarlyAndLatencyIsCharged) {
    json topo = four_sites({{"default_link", {{"latency_ms", 40}}}});
    json sc = replication_scenario({"cern"}, 1);
    sc["steps"].push_back({{"at", 50000}, {"actor", "ui"}, {"action", "catalog.lookup"}, {"args", {{"lfn", "cms/run/f0.dat"}}}});
    const json r = gm::sim::run(Topology::from_json(topo), Scenario::from_json(sc));
    const auto& steps = r["steps"];
    for (std::size_t i = 0; i < steps.size(); ++i)
        EXPECT_GE(steps[i]["at"].get<gm::TimeMs>(), sc["steps"][i]["at"].get<gm::TimeMs>()) << i;
    // One request and one reply.
    EXPECT_EQ(r["virtual_time_ms"].get<gm::TimeMs>(), 50000 + 80);
    EXPECT_EQ(steps.back()["result"].size(), 2u);
}

TEST(Sim, ScheduledInjectionFromScenario) {
    json sc = replication_scenario({"cern"}, 1,
                                   json::array({{{"kind", "converged"}},
                                                {{"kind", "log_order"}, {"site", "cern"}, {"lfn", "cms/run/f0.dat"},
                                                 {"before", "transfer_fail"}, {"after", "transfer_ok"}}}));
    sc["steps"].insert(sc["steps"].begin(), json{{"at", 0}, {"actor", "ui"}, {"action", "harness.inject"},
                                                {"args", {{"from", "fermilab"}, {"to", "cern"}, {"channel", "data"},
                                                          {"schedule", {"fail", "corrupt"}}}}});
    Harness h(Topology::from_json(four_sites()));
    const json r = h.run(Scenario::from_json(sc));
    EXPECT_TRUE(r["passed"].get<bool>()) << r["first_failure"];
    EXPECT_EQ(r["net"]["lost"], 1);
    EXPECT_EQ(r["net"]["corrupted"], 1);
    EXPECT_EQ(h.daemon("cern").entries("cms").at(0).state, gm::EntryState::Replicated);
}

TEST(Sim, FailingExpectationIsReported) {
    const json expect = json::array({{{"kind", "converged"}},
                                     {{"kind", "replica_count"}, {"site", "italy"}, {"vo", "cms"}, {"equals", 3}},
                                     {{"kind", "step_error"}, {"step", 0}, {"code", "VoNotServed"}}});
    const json r = gm::sim::run(Topology::from_json(four_sites()),
                                Scenario::from_json(replication_scenario({"cern"}, 3, expect)));
    EXPECT_FALSE(r["passed"].get<bool>());
    EXPECT_TRUE(r["expectations"][0]["passed"].get<bool>());
    EXPECT_FALSE(r["expectations"][1]["passed"].get<bool>());
    EXPECT_FALSE(r["expectations"][2]["passed"].get<bool>());
    EXPECT_NE(r["first_failure"].get<std::string>().find("expect[1] replica_count"), std::string::npos);
}

TEST(Sim, OracleFollowsFiltersAndDetectsTampering) {
    json sc = replication_scenario({"cern", "italy"}, 3, json::array({{{"kind", "converged"}}}));
    sc["steps"].insert(sc["steps"].begin(), json{{"at", 0}, {"actor", "italy"}, {"action", "mirror.set_import_filter"},
                                                {"args", {{"vo", "cms"}, {"include", json::array()}, {"exclude", {"*f1*"}}}}});
    Harness h(Topology::from_json(four_sites()));
    const json r = h.run(Scenario::from_json(sc));
    ASSERT_TRUE(r["passed"].get<bool>()) << r["first_failure"];
    EXPECT_EQ(h.se("italy").list_dir("cms", "run").size(), 2u);
    EXPECT_EQ(h.catalog().lookup("cms/run/f1.dat").size(), 2u);

    h.se("italy").remove("cms", "run/f0.dat");
    auto c = h.converged();
    EXPECT_FALSE(c.converged);
    ASSERT_FALSE(c.diff.empty());

    h.se("italy").put_file("cms", "run/f0.dat", gmtest::random_bytes(20000, 1));
    EXPECT_TRUE(h.converged().converged);
    h.catalog().add_replica("cms/run/f1.dat", gm::PhysicalFileName::parse("gmft://italy.grid:9402/storage/cms/run/f1.dat"));
    EXPECT_FALSE(h.converged().converged);
}

TEST(Sim, TopologyValidation) {
    auto bad = [](json j) { return code_of([&] { Topology::from_json(j); }); };
    EXPECT_EQ(bad(json{{"sites", json::array()}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"sites", {gmtest::site_json("a"), gmtest::site_json("a")}}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"sites", {gmtest::site_json("catalog")}}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"sites", {gmtest::site_json("ui")}}}), "InvalidConfig");
    json same_port = gmtest::site_json("a");
    same_port["daemon"]["port"] = 9402;
    EXPECT_EQ(bad(json{{"sites", {same_port}}}), "InvalidConfig");
    json foreign_vo = gmtest::site_json("a");
    foreign_vo["daemon"]["vos"] = {"atlas"};
    EXPECT_EQ(bad(json{{"sites", {foreign_vo}}}), "InvalidConfig");
    const json two = json::array({gmtest::site_json("a"), gmtest::site_json("b")});
    EXPECT_EQ(bad(json{{"sites", two}, {"links", {{{"a", "a"}, {"b", "zz"}}}}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"sites", two}, {"links", {{{"a", "a"}, {"b", "b"}, {"fail_probability", 1.5}}}}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"sites", two}, {"links", {{{"a", "a"}, {"b", "b"}, {"corrupt_probability", -0.1}}}}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"sites", two}, {"naming", "Strict"}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"sites", two}, {"catalog", "nohost"}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"sites", "x"}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"sites", two}}), "ok");
}

TEST(Sim, LinksAreSymmetricUnlessDirected) {
    const json two = json::array({gmtest::site_json("a"), gmtest::site_json("b")});
    Harness h(Topology::from_json(json{{"sites", two},
                                       {"links", {{{"a", "a"}, {"b", "b"}, {"latency_ms", 7}},
                                                  {{"a", "ui"}, {"b", "a"}, {"latency_ms", 3}, {"directed", true}}}}}));
    EXPECT_EQ(h.net().link("a", "b").latency_ms, 7);
    EXPECT_EQ(h.net().link("b", "a").latency_ms, 7);
    EXPECT_EQ(h.net().link("ui", "a").latency_ms, 3);
    EXPECT_EQ(h.net().link("a", "ui").latency_ms, 0);
}

TEST(Sim, ScenarioValidation) {
    auto bad = [](json j) { return code_of([&] { Scenario::from_json(j); }); };
    EXPECT_EQ(bad(json{{"steps", {{{"at", 5}, {"action", "harness.advance"}}, {{"at", 4}, {"action", "harness.advance"}}}}}),
              "InvalidConfig");
    EXPECT_EQ(bad(json{{"steps", json::array()}, {"expect", json::object()}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"steps", {{{"at", "soon"}, {"action", "x.y"}}}}}), "InvalidConfig");
    EXPECT_EQ(bad(json{{"steps", {{{"at", 0}, {"action", "harness.advance"}}}}}), "ok");
}

TEST(Sim, UnknownActionsFailTheStepOnly) {
    json sc{{"steps", {{{"at", 0}, {"action", "nope.op"}}, {{"at", 0}, {"actor", "mars"}, {"action", "se.stat"}}}},
            {"expect", {{{"kind", "step_error"}, {"step", 0}, {"code", "BadRequest"}},
                        {{"kind", "step_error"}, {"step", 1}, {"code", "BadRequest"}}}}};
    const json r = gm::sim::run(Topology::from_json(four_sites()), Scenario::from_json(sc));
    EXPECT_TRUE(r["passed"].get<bool>()) << r["first_failure"];
}

TEST(Sim, Fnv1a) {
    EXPECT_EQ(gm::sim::fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(gm::sim::fnv1a_hex("a"), "af63dc4c8601ec8c");
}

}  // namespace
