#include <doctest.h>

#include "rubricrl/errors.hpp"
#include "rubricrl/io.hpp"
#include "rubricrl/proxy_harness.hpp"
#include "rubricrl/reward.hpp"

#include "support/fake_transport.hpp"
#include "support/temp_dir.hpp"

#include <algorithm>
#include <sstream>

using namespace rubricrl;
using testing_support::FakeTransport;
using testing_support::ok_body;

namespace {

PreferenceSample sample(const std::string& id, Verdict gold = Verdict::first) {
    PreferenceSample s;
    s.id = id;
    s.question = "Which is better?";
    s.response_1 = "one";
    s.response_2 = "two";
    s.gold_verdict = gold;
    return s;
}

Rubric rubric() { return std::get<Rubric>(parse_rubric("1. Grounding (1.0): matches the image.")); }

std::string proxy_says(int v) { return "<think>checked</think><answer>" + std::to_string(v) + "</answer>"; }

ModelEndpoint proxy(const std::string& name, const std::string& sid, const std::string& text) {
    ScriptedFixture f;
    f.set(sid + "/proxy/0", text);
    return ModelEndpoint::scripted(name, f);
}

struct Harness {
    std::shared_ptr<FakeTransport> transport = std::make_shared<FakeTransport>(std::vector{ok_body("")});
    Gateway gateway{transport};
    PromptTemplates templates = PromptTemplates::defaults();
};

} // namespace

TEST_CASE("check_transfer outcomes") {
    Harness h;
    const auto s = sample("s1");
    auto hit = check_transfer(h.gateway, h.templates, s, rubric(), proxy("p", "s1", proxy_says(1)));
    CHECK(hit.transferable == 1);
    CHECK(hit.proxy_verdict == Verdict::first);
    CHECK(hit.reward() == 1.0);

    auto miss = check_transfer(h.gateway, h.templates, s, rubric(), proxy("p", "s1", proxy_says(2)));
    CHECK(miss.transferable == 0);
    CHECK(miss.reward() == -1.0);

    auto garbled = check_transfer(h.gateway, h.templates, s, rubric(), proxy("p", "s1", "I think r1"));
    CHECK_FALSE(garbled.proxy_verdict.has_value());
    CHECK(garbled.transferable == 0);
    CHECK(garbled.raw == "I think r1");

    CHECK_THROWS_AS(check_transfer(h.gateway, h.templates, sample("other"), rubric(), proxy("p", "s1", "x")),
                    FixtureError);
    CHECK_THROWS_AS(check_transfer(h.gateway, h.templates, s, Rubric{}, proxy("p", "s1", "x")), ValidationError);
    CHECK(h.transport->calls() == 0);
}

TEST_CASE("the proxy prompt always carries the rubric") {
    ScriptedFixture f;
    f.set_cases("s1/proxy/0", {{"Grounding (1.0): matches the image.", proxy_says(1)}}, "no rubric seen");
    Harness h;
    auto out = check_transfer(h.gateway, h.templates, sample("s1"), rubric(), ModelEndpoint::scripted("p", f));
    CHECK(out.transferable == 1);
    CHECK(make_proxy_request(h.templates, sample("s1"), rubric()).temperature == std::nullopt);
}

TEST_CASE("reward equals 2*transferable-1 for every outcome") {
    Harness h;
    for (auto gold : {Verdict::first, Verdict::second}) {
        for (const std::string& text : {proxy_says(1), proxy_says(2), std::string("noise")}) {
            const auto s = sample("s1", gold);
            auto o = check_transfer(h.gateway, h.templates, s, rubric(), proxy("p", "s1", text));
            CHECK(o.reward() == 2.0 * o.transferable - 1.0);
            CHECK(o.reward() == proxy_reward(o.proxy_verdict, gold));
        }
    }
}

TEST_CASE("ensembles average per-proxy rewards") {
    Harness h;
    const auto s = sample("s1");
    std::vector<ModelEndpoint> two = {proxy("a", "s1", proxy_says(1)), proxy("b", "s1", proxy_says(2))};
    auto e2 = check_transfer_ensemble(h.gateway, h.templates, s, rubric(), two);
    CHECK(e2.mean_reward == 0.0);
    REQUIRE(e2.outcomes.size() == 2);
    CHECK(e2.outcomes[0].proxy_name == "a");
    CHECK(e2.outcomes[1].proxy_name == "b");

    std::vector<ModelEndpoint> three = {proxy("a", "s1", proxy_says(1)), proxy("b", "s1", proxy_says(1)),
                                        proxy("c", "s1", proxy_says(2))};
    CHECK(check_transfer_ensemble(h.gateway, h.templates, s, rubric(), three).mean_reward ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    std::vector<ModelEndpoint> one = {proxy("a", "s1", proxy_says(2))};
    CHECK(check_transfer_ensemble(h.gateway, h.templates, s, rubric(), one).mean_reward ==
          check_transfer(h.gateway, h.templates, s, rubric(), one[0]).reward());

    std::vector<ModelEndpoint> broken = {proxy("a", "s1", proxy_says(1)), proxy("b", "zz", proxy_says(1))};
    CHECK_THROWS_AS(check_transfer_ensemble(h.gateway, h.templates, s, rubric(), broken), FixtureError);
    CHECK_THROWS_AS(check_transfer_ensemble(h.gateway, h.templates, s, rubric(), std::span<const ModelEndpoint>{}),
                    ValidationError);
}

TEST_CASE("transfer outcomes do not depend on evaluation order") {
    ScriptedFixture f;
    std::vector<PreferenceSample> batch;
    for (int i = 0; i < 6; ++i) {
        const auto id = "s" + std::to_string(i);
        f.set(id + "/proxy/0", proxy_says(i % 3 == 0 ? 1 : 2));
        batch.push_back(sample(id, i % 2 == 0 ? Verdict::first : Verdict::second));
    }
    const auto p = ModelEndpoint::scripted("p", f);
    Harness h;
    std::map<std::string, int> forward;
    for (const auto& s : batch) {
        forward[s.id] = check_transfer(h.gateway, h.templates, s, rubric(), p).transferable;
    }
    std::reverse(batch.begin(), batch.end());
    for (const auto& s : batch) {
        CHECK(check_transfer(h.gateway, h.templates, s, rubric(), p).transferable == forward[s.id]);
    }
}

TEST_CASE("transfer cache serves repeats without a proxy call") {
    Harness h;
    TransferCache cache;
    TransferOptions opts;
    opts.cache = &cache;
    const auto p = proxy("p", "s1", proxy_says(1));
    check_transfer(h.gateway, h.templates, sample("s1"), rubric(), p, opts);
    const auto calls = h.gateway.scripted_calls();
    auto again = check_transfer(h.gateway, h.templates, sample("s1"), rubric(), p, opts);
    CHECK(again.transferable == 1);
    CHECK(h.gateway.scripted_calls() == calls);
    CHECK(cache.size() == 1);
}

TEST_CASE("proxy-verified inference keeps the policy verdict") {
    const std::string judged = "<rubric>1. Grounding (1.0): matches.</rubric><eval>r1 wins</eval><answer>1</answer>";
    ScriptedFixture pf;
    pf.set("s1/policy/0", judged);
    pf.set("s2/policy/0", "no tags at all");
    const auto policy = ModelEndpoint::scripted("policy", pf);

    Harness h;
    auto agree = proxy_verified_infer(h.gateway, h.templates, sample("s1"), policy, proxy("p", "s1", proxy_says(1)));
    CHECK(agree.valid);
    CHECK(agree.agreement);
    CHECK(agree.final_verdict == Verdict::first);

    auto disagree =
        proxy_verified_infer(h.gateway, h.templates, sample("s1"), policy, proxy("p", "s1", proxy_says(2)));
    CHECK_FALSE(disagree.agreement);
    CHECK(disagree.final_verdict == Verdict::first);
    CHECK(disagree.proxy_verdict == Verdict::second);

    const auto before = h.gateway.scripted_calls();
    // The proxy fixture has no entry for s2; a proxy call would throw.
    auto invalid = proxy_verified_infer(h.gateway, h.templates, sample("s2"), policy, proxy("p", "s1", proxy_says(1)));
    CHECK(h.gateway.scripted_calls() == before + 1);
    CHECK_FALSE(invalid.valid);
    CHECK_FALSE(invalid.agreement);
    CHECK_FALSE(invalid.policy_verdict.has_value());
    CHECK_FALSE(invalid.final_verdict.has_value());

    testing_support::TempDir dir;
    append_disagreement_log(dir / "log.jsonl", disagree);
    append_disagreement_log(dir / "log.jsonl", invalid);
    std::vector<std::string> lines;
    std::istringstream in(read_text_file(dir / "log.jsonl"));
    for (std::string line; std::getline(in, line);) {
        lines.push_back(line);
    }
    REQUIRE(lines.size() == 2);
    const auto first = nlohmann::json::parse(lines[0]);
    CHECK(first["final_verdict"] == 1);
    CHECK(first["proxy_verdict"] == 2);
    CHECK(first["agreement"] == false);
    CHECK(nlohmann::json::parse(lines[1])["final_verdict"].is_null());
}
