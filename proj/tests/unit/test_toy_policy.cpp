#include <doctest.h>

#include "rubricrl/errors.hpp"
#include "rubricrl/toy_policy.hpp"

#include <cmath>
#include <numeric>

using namespace rubricrl;

namespace {

ToyPolicy two_actions(double temperature = 1.0) {
    return ToyPolicy::uniform({"T1"}, {"c0", "c1"}, temperature);
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

} // namespace

TEST_CASE("uniform policy layout") {
    const auto p = ToyPolicy::uniform({"T1", "T2"}, {"a", "b", "c"});
    CHECK(p.num_actions() == 4);
    CHECK(p.num_contexts() == 3);
    CHECK(p.actions()[0] == ToyAction{"T1", Verdict::first});
    CHECK(p.actions()[3] == ToyAction{"T2", Verdict::second});
    CHECK(p.action_index({"T2", Verdict::first}) == 2);
    CHECK(p.context_index("c") == 2);
    CHECK(p.template_probability("T1") == doctest::Approx(0.5));
    CHECK_THROWS_AS(p.context_index("z"), ValidationError);
    CHECK_THROWS_AS(ToyPolicy::uniform({"T1"}, {"a", "a"}), ValidationError);
    CHECK_THROWS_AS(ToyPolicy::uniform({"T1"}, {"a"}, 0.0), ValidationError);
}

TEST_CASE("probabilities are a distribution at any temperature") {
    for (double t : {0.25, 1.0, 3.0}) {
        auto p = ToyPolicy::uniform({"T1", "T2", "T3"}, {"c"}, t);
        auto row = p.logits(0);
        row[0] = 40.0;
        row[1] = -15.0;
        row[4] = 3.0;
        const auto probs = p.probabilities(0);
        CHECK(sum(probs) == doctest::Approx(1.0).epsilon(1e-12));
        for (double x : probs) {
            CHECK(x >= 0.0);
        }
        CHECK(std::exp(p.log_prob(0, 4)) == doctest::Approx(probs[4]).epsilon(1e-12));
    }
}

TEST_CASE("sampling follows the probabilities and the seed") {
    auto p = two_actions();
    p.logits(0)[0] = std::log(3.0);  // P = (0.75, 0.25)
    Rng a(11);
    Rng b(11);
    int first = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto x = p.sample(0, a);
        CHECK(x == p.sample(0, b));
        first += x == 0 ? 1 : 0;
    }
    CHECK(first / 20000.0 == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("json round trip") {
    auto p = ToyPolicy::uniform({"T1", "T2"}, {"a", "b"}, 0.7);
    p.logits(1)[2] = 1.25;
    CHECK(ToyPolicy::from_json(p.to_json()) == p);
}

TEST_CASE("cold start fits a single labeled context") {
    const auto p = two_actions();
    const std::vector<LabeledContext> data = {{0, 1}};
    const auto fitted = toy_cold_start(p, data, {100, 1.0});
    CHECK(fitted.probabilities(0)[1] > 0.9);
    // untouched context stays uniform
    CHECK(fitted.probabilities(1)[0] == doctest::Approx(0.5));
}

TEST_CASE("cold start on balanced labels stays near one half") {
    const std::vector<LabeledContext> data = {{0, 0}, {0, 1}, {0, 1}, {0, 0}, {0, 0}, {0, 1}};
    const auto fitted = toy_cold_start(two_actions(), data, {500, 1.0});
    CHECK(fitted.probabilities(0)[0] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("cold start loss is monotone in the step count") {
    const std::vector<LabeledContext> data = {{0, 0}, {0, 0}, {0, 1}, {1, 1}};
    for (double t : {0.5, 1.0, 2.0}) {
        const auto p = two_actions(t);
        double previous = mean_nll(p, data);
        for (int steps : {1, 10, 50, 100}) {
            const double nll = mean_nll(toy_cold_start(p, data, {steps, 50.0}), data);
            CHECK(nll <= previous + 1e-15);
            previous = nll;
        }
    }
    CHECK_THROWS_AS(toy_cold_start(two_actions(), std::span<const LabeledContext>{}), ValidationError);
}

TEST_CASE("grpo step direction") {
    const auto p = two_actions();
    const std::vector<ToyRollout> rollouts = {{0, 0, 1.0}, {0, 1, -1.0}};
    const auto next = toy_grpo_step(p, rollouts, {0.1, 0.2, 1, 0.0});
    CHECK(next.probabilities(0)[0] > p.probabilities(0)[0]);
    CHECK(sum(next.probabilities(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(next.probabilities(1) == p.probabilities(1));

    const std::vector<ToyRollout> zero = {{0, 0, 0.0}, {0, 1, 0.0}, {1, 1, 0.0}};
    CHECK(toy_grpo_step(p, zero, {0.5, 0.2, 1, 0.0}) == p);
    CHECK(toy_grpo_step(p, std::span<const ToyRollout>{}, {}) == p);
}

TEST_CASE("scaling advantages keeps the update direction") {
    auto p = ToyPolicy::uniform({"T1", "T2"}, {"c"});
    p.logits(0)[1] = 0.3;
    const std::vector<ToyRollout> base = {{0, 0, 0.8}, {0, 3, -0.5}, {0, 1, 0.1}};
    auto delta = [&](double c) {
        std::vector<ToyRollout> scaled = base;
        for (auto& r : scaled) {
            r.advantage *= c;
        }
        // a single epoch keeps every ratio at 1, so clipping never engages
        const auto next = toy_grpo_step(p, scaled, {0.01, 0.2, 1, 0.0});
        std::vector<double> d;
        for (std::size_t k = 0; k < p.num_actions(); ++k) {
            d.push_back(next.probabilities(0)[k] - p.probabilities(0)[k]);
        }
        return d;
    };
    const auto ref = delta(1.0);
    const auto argmax = std::max_element(ref.begin(), ref.end()) - ref.begin();
    for (double c : {0.001, 0.5, 3.0, 40.0}) {
        const auto d = delta(c);
        CHECK(std::max_element(d.begin(), d.end()) - d.begin() == argmax);
    }
}

TEST_CASE("grpo gradient matches a finite-difference oracle") {
    // Objective: mean_i ratio_i * A_i. At the old policy its gradient is
    // mean_i A_i * d p(a_i) / d logits / p(a_i).
    auto p = ToyPolicy::uniform({"T1", "T2"}, {"c"}, 0.8);
    p.logits(0)[0] = 0.4;
    p.logits(0)[2] = -0.7;
    const std::vector<ToyRollout> rollouts = {{0, 0, 1.2}, {0, 2, -0.4}, {0, 3, 0.9}};
    const double lr = 1e-3;
    const auto next = toy_grpo_step(p, rollouts, {lr, 0.2, 1, 0.0});

    auto objective = [&](const ToyPolicy& q) {
        double total = 0.0;
        for (const auto& r : rollouts) {
            total += r.advantage * q.probabilities(0)[r.action] / p.probabilities(0)[r.action];
        }
        return total / static_cast<double>(rollouts.size());
    };
    const double h = 1e-6;
    for (std::size_t k = 0; k < p.num_actions(); ++k) {
        auto up = p;
        auto down = p;
        up.logits(0)[k] += h;
        down.logits(0)[k] -= h;
        const double numeric = (objective(up) - objective(down)) / (2 * h);
        CHECK((next.logits(0)[k] - p.logits(0)[k]) / lr == doctest::Approx(numeric).epsilon(1e-6));
    }
}

TEST_CASE("clipping stops pushing past the trust region") {
    const auto p = two_actions();
    const std::vector<ToyRollout> rollouts = {{0, 0, 1.0}};
    // huge step in the first epoch drives the ratio past 1 + clip; later epochs add nothing
    const auto one = toy_grpo_step(p, rollouts, {50.0, 0.2, 1, 0.0});
    const auto many = toy_grpo_step(p, rollouts, {50.0, 0.2, 5, 0.0});
    CHECK(many == one);
}

TEST_CASE("kl penalty pulls toward the reference") {
    auto p = two_actions();
    p.logits(0)[0] = 2.0;
    const auto reference = two_actions();
    const std::vector<ToyRollout> none = {{0, 0, 0.0}};
    const auto next = toy_grpo_step(p, none, {0.5, 0.2, 1, 0.5}, &reference);
    CHECK(next.probabilities(0)[0] < p.probabilities(0)[0]);
    CHECK(toy_grpo_step(p, none, {0.5, 0.2, 1, 0.0}, &reference) == p);
}
