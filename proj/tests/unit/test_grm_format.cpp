#include <doctest.h>

#include "rubricrl/errors.hpp"
#include "rubricrl/grm_format.hpp"
#include "rubricrl/templates.hpp"

#include "support/temp_dir.hpp"

#include <fstream>

using namespace rubricrl;

namespace {

FormatErrorKind kind_of(const Parsed<StructuredOutput>& p) {
    REQUIRE(std::holds_alternative<FormatError>(p));
    return std::get<FormatError>(p).kind;
}

FormatErrorKind proxy_kind(const Parsed<ProxyOutput>& p) {
    REQUIRE(std::holds_alternative<FormatError>(p));
    return std::get<FormatError>(p).kind;
}

PreferenceSample sample() {
    PreferenceSample s;
    s.id = "s1";
    s.question = "hi";
    s.response_1 = "first answer here";
    s.response_2 = "second answer here";
    return s;
}

} // namespace

TEST_CASE("weighted rubric output parses into two criteria") {
    const std::string text = "<rubric>1. Accuracy (0.6): matches the image.\n2. Clarity (0.4): easy to read.</rubric>"
                             "<eval>r1 better on accuracy</eval><answer>1</answer>";
    auto parsed = parse_grm_output(text);
    REQUIRE(is_ok(parsed));
    const auto& out = std::get<StructuredOutput>(parsed);
    CHECK(out.answer == Verdict::first);
    REQUIRE(out.rubric.criteria.size() == 2);
    CHECK(out.rubric.criteria[0].name == "Accuracy");
    CHECK(out.rubric.criteria[0].weight == doctest::Approx(0.6));
    CHECK(out.rubric.criteria[1].name == "Clarity");
    CHECK(out.rubric.criteria[1].description == "easy to read.");
    CHECK(out.evaluation == "r1 better on accuracy");
    CHECK(out.raw == text);
}

TEST_CASE("format errors report the first violated condition") {
    CHECK(kind_of(parse_grm_output("<rubric>x</rubric><eval>y</eval>")) == FormatErrorKind::missing_tag);
    CHECK(kind_of(parse_grm_output("<rubric>x</rubric><eval>y</eval><answer>3</answer>")) ==
          FormatErrorKind::bad_verdict);
    CHECK(kind_of(parse_grm_output("<eval>y</eval><rubric>x</rubric><answer>1</answer>")) ==
          FormatErrorKind::tag_order);
    CHECK(kind_of(parse_grm_output("<rubric>x</rubric><eval>y</eval><eval>y</eval><answer>1</answer>")) ==
          FormatErrorKind::tag_order);
    CHECK(kind_of(parse_grm_output("<rubric>x</rubric><eval>  </eval><answer>1</answer>")) ==
          FormatErrorKind::empty_section);
    CHECK(kind_of(parse_grm_output("<rubric>x</rubric><eval>y</eval><answer>1</answer> and more")) ==
          FormatErrorKind::trailing_content);
    CHECK(kind_of(parse_grm_output("<rubric>x</rubric> gap <eval>y</eval><answer>1</answer>")) ==
          FormatErrorKind::trailing_content);
    CHECK(kind_of(parse_grm_output("<rubric>x</rubric><eval>y</eval><answer></answer>")) ==
          FormatErrorKind::empty_section);
    CHECK(kind_of(parse_grm_output("")) == FormatErrorKind::missing_tag);
}

TEST_CASE("preamble is discarded unless strict") {
    const std::string text = "Let me think first.\n<rubric>x</rubric><eval>y</eval><answer> 2 </answer>\n";
    auto lenient = parse_grm_output(text);
    REQUIRE(is_ok(lenient));
    CHECK(std::get<StructuredOutput>(lenient).answer == Verdict::second);
    CHECK(kind_of(parse_grm_output(text, ParseOptions{true})) == FormatErrorKind::trailing_content);
    CHECK(check_format("  <rubric>x</rubric><eval>y</eval><answer>1</answer>", ParseOptions{true}));
}

TEST_CASE("check_format agrees with the parser") {
    CHECK(check_format("<rubric>x</rubric><eval>y</eval><answer>1</answer>"));
    CHECK_FALSE(check_format("<rubric>x</rubric><answer>1</answer>"));
    CHECK_FALSE(check_format("<eval>y</eval><rubric>x</rubric><answer>1</answer>"));
}

TEST_CASE("tags are case sensitive") {
    CHECK(kind_of(parse_grm_output("<Rubric>x</Rubric><eval>y</eval><answer>1</answer>")) ==
          FormatErrorKind::missing_tag);
}

TEST_CASE("proxy output") {
    auto ok = parse_proxy_output("<think>criterion 1 favors r2</think><answer>2</answer>");
    REQUIRE(is_ok(ok));
    CHECK(std::get<ProxyOutput>(ok).answer == Verdict::second);
    CHECK(std::get<ProxyOutput>(ok).think == "criterion 1 favors r2");

    CHECK(is_ok(parse_proxy_output("<think></think><answer>1</answer>")));
    CHECK(proxy_kind(parse_proxy_output("<answer>1</answer>")) == FormatErrorKind::missing_tag);
    CHECK(proxy_kind(parse_proxy_output("<think>a</think><answer>1</answer><rubric>r</rubric>")) ==
          FormatErrorKind::trailing_content);
    CHECK(proxy_kind(parse_proxy_output("<rubric>r</rubric><think>a</think><answer>1</answer>")) ==
          FormatErrorKind::trailing_content);
    CHECK(proxy_kind(parse_proxy_output("<think>a</think><answer>yes</answer>")) == FormatErrorKind::bad_verdict);
    CHECK(proxy_kind(parse_proxy_output("I think r1")) == FormatErrorKind::missing_tag);
}

TEST_CASE("rubric parsing") {
    SUBCASE("weights summing to one are kept") {
        auto r = std::get<Rubric>(parse_rubric("1. Accuracy (0.5): a\n2. Relevance (0.5): b"));
        REQUIRE(r.criteria.size() == 2);
        CHECK(r.has_weights());
        CHECK(*r.criteria[0].weight == doctest::Approx(0.5));
        CHECK(*r.criteria[1].weight == doctest::Approx(0.5));
    }
    SUBCASE("free text falls back to one criterion") {
        auto r = std::get<Rubric>(parse_rubric("Judge factuality first, then tone."));
        REQUIRE(r.criteria.size() == 1);
        CHECK(r.criteria[0].name.empty());
        CHECK(r.criteria[0].description == "Judge factuality first, then tone.");
    }
    SUBCASE("weights summing to 1.4 are discarded everywhere") {
        auto r = std::get<Rubric>(parse_rubric("1. A (0.7): x\n2. B (0.7): y"));
        REQUIRE(r.criteria.size() == 2);
        CHECK_FALSE(r.criteria[0].weight.has_value());
        CHECK_FALSE(r.criteria[1].weight.has_value());
        CHECK(r.criteria[1].name == "B");
    }
    SUBCASE("a missing weight clears the others") {
        auto r = std::get<Rubric>(parse_rubric("1. A (1.0): x\n2. B: y"));
        CHECK_FALSE(r.has_weights());
        CHECK_FALSE(r.criteria[0].weight.has_value());
    }
    SUBCASE("continuation lines join the previous description") {
        auto r = std::get<Rubric>(parse_rubric("1) Grounding: objects\n   must exist\n2) Tone: polite"));
        REQUIRE(r.criteria.size() == 2);
        CHECK(r.criteria[0].description == "objects\nmust exist");
    }
    SUBCASE("raw is verbatim") {
        const std::string text = "  1. A (0.5): x\n\n2. B (0.5): y  ";
        CHECK(std::get<Rubric>(parse_rubric(text)).raw == text);
    }
    SUBCASE("blank input is an empty section") {
        auto r = parse_rubric(" \n ");
        REQUIRE(std::holds_alternative<FormatError>(r));
        CHECK(std::get<FormatError>(r).kind == FormatErrorKind::empty_section);
    }
    SUBCASE("decimal numbers are not items") {
        auto r = std::get<Rubric>(parse_rubric("3.5 stars is the bar"));
        REQUIRE(r.criteria.size() == 1);
        CHECK(r.criteria[0].name.empty());
    }
}

TEST_CASE("serialize then parse round-trips") {
    auto first = parse_grm_output("<rubric>1. A (0.3): x\n2. B (0.7): y</rubric><eval> both fine </eval><answer>2</answer>");
    REQUIRE(is_ok(first));
    const auto& a = std::get<StructuredOutput>(first);
    auto again = parse_grm_output(serialize(a));
    REQUIRE(is_ok(again));
    CHECK(std::get<StructuredOutput>(again) == a);
    CHECK(serialize(std::get<StructuredOutput>(again)) == serialize(a));

    ProxyOutput p{"why", Verdict::first, ""};
    auto back = parse_proxy_output(serialize(p));
    REQUIRE(is_ok(back));
    CHECK(std::get<ProxyOutput>(back).think == "why");
}

TEST_CASE("template substitution") {
    const auto s = sample();
    CHECK(substitute("Q: {question}", s) == "Q: hi");
    CHECK(substitute("{image}|{response_1}|{response_2}", s) == "(none)|first answer here|second answer here");
    auto with_image = s;
    with_image.image_ref = "file://a.png";
    CHECK(substitute("{image}", with_image) == "file://a.png");
    CHECK(substitute("{unknown} {question", s) == "{unknown} {question");

    auto tricky = s;
    tricky.question = "what is {rubric}?";
    CHECK(substitute("{question} / {rubric}", tricky, "R") == "what is {rubric}? / R");
}

TEST_CASE("prompt rendering is deterministic and checks placeholders") {
    const auto t = PromptTemplates::defaults();
    const auto s = sample();
    CHECK(render_policy_prompt(t, s) == render_policy_prompt(t, s));
    Rubric r = std::get<Rubric>(parse_rubric("1. A: x"));
    const auto proxy = render_proxy_prompt(t, s, r);
    CHECK(proxy.find("1. A: x") != std::string::npos);
    CHECK(proxy.find("hi") != std::string::npos);
    CHECK_THROWS_AS(render_proxy_prompt(t, s, Rubric{}), ValidationError);

    auto bad = t;
    bad.proxy.user = "Q: {question}";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = t;
    bad.policy.user = "no placeholders";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_NOTHROW(t.validate());
}

TEST_CASE("templates load from files and fall back to defaults") {
    testing_support::TempDir dir;
    {
        std::ofstream(dir / "proxy_user.txt") << "Q: {question}\nR: {rubric}";
    }
    TemplatePaths paths;
    paths.proxy_user = dir / "proxy_user.txt";
    const auto t = load_templates(paths);
    CHECK(t.proxy.user == "Q: {question}\nR: {rubric}");
    CHECK(t.policy.user == PromptTemplates::defaults().policy.user);

    paths.policy_user = dir / "missing.txt";
    CHECK_THROWS_AS(load_templates(paths), ConfigError);
}

TEST_CASE("shipped template files match the built-in defaults") {
    const std::filesystem::path root = std::filesystem::path(RUBRICRL_SOURCE_DIR) / "templates";
    TemplatePaths paths{root / "policy_system.txt", root / "policy_user.txt", root / "proxy_system.txt",
                        root / "proxy_user.txt", root / "proxy_no_rubric_user.txt"};
    const auto shipped = load_templates(paths);
    const auto defaults = PromptTemplates::defaults();
    CHECK(shipped.policy.system == defaults.policy.system);
    CHECK(shipped.policy.user == defaults.policy.user);
    CHECK(shipped.proxy.system == defaults.proxy.system);
    CHECK(shipped.proxy.user == defaults.proxy.user);
    CHECK(shipped.proxy_no_rubric.system == defaults.proxy_no_rubric.system);
    CHECK(shipped.proxy_no_rubric.user == defaults.proxy_no_rubric.user);
}
