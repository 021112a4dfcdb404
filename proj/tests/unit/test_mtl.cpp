#include <doctest.h>

#include <fstream>
#include <sstream>

#include "dpmtl/mtl.hpp"
#include "oracles.hpp"

using namespace dpmtl::mtl;

namespace {

PredicateTable box_table() {
    PredicateTable t;
    t.emplace("p", std::make_shared<const Predicate>(Predicate::box("p", {-1.0}, {1.0})));
    t.emplace("q", std::make_shared<const Predicate>(Predicate::box("q", {0.0}, {2.0})));
    return t;
}

Trajectory line(std::vector<double> xs) {
    std::vector<State> s;
    for (double x : xs) s.push_back({x});
    return Trajectory(s);
}

// Direct transcription of the quantitative semantics, quadratic Until.
double naive_rho(const Trajectory& tr, const Formula& f, int t) {
    const double inf = std::numeric_limits<double>::infinity();
    if (std::holds_alternative<TrueNode>(f.node())) return inf;
    if (auto* a = std::get_if<AtomNode>(&f.node())) return signed_distance(tr[static_cast<std::size_t>(t)], *a->predicate);
    if (auto* n = std::get_if<NotNode>(&f.node())) return -naive_rho(tr, *n->child, t);
    if (auto* n = std::get_if<AndNode>(&f.node())) return std::min(naive_rho(tr, *n->left, t), naive_rho(tr, *n->right, t));
    if (auto* n = std::get_if<OrNode>(&f.node())) return std::max(naive_rho(tr, *n->left, t), naive_rho(tr, *n->right, t));
    if (auto* n = std::get_if<EventuallyNode>(&f.node())) {
        double best = -inf;
        for (int k = t + n->interval.a; k <= t + n->interval.b; ++k) best = std::max(best, naive_rho(tr, *n->child, k));
        return best;
    }
    if (auto* n = std::get_if<GloballyNode>(&f.node())) {
        double worst = inf;
        for (int k = t + n->interval.a; k <= t + n->interval.b; ++k) worst = std::min(worst, naive_rho(tr, *n->child, k));
        return worst;
    }
    const auto& u = std::get<UntilNode>(f.node());
    double best = -inf;
    for (int k = t + u.interval.a; k <= t + u.interval.b; ++k) {
        double v = naive_rho(tr, *u.right, k);
        for (int j = t + u.interval.a; j < k; ++j) v = std::min(v, naive_rho(tr, *u.left, j));
        best = std::max(best, v);
    }
    return best;
}

}  // namespace

TEST_SUITE("mtl") {

TEST_CASE("signed distance of a box") {
    const auto box = Predicate::box("R", {-10.0, -10.0}, {10.0, 10.0});
    CHECK(signed_distance({15.0, 0.0}, box) == doctest::Approx(-5.0));
    CHECK(signed_distance({0.0, 0.0}, box) == doctest::Approx(10.0));
    CHECK(signed_distance({10.0, 3.0}, box) == doctest::Approx(0.0));
    CHECK(box.contains({10.0, 3.0}));
    CHECK_FALSE(box.contains({10.5, 3.0}));
}

TEST_CASE("halfspace normals are normalised") {
    const Predicate p("h", {Halfspace{{3.0, 4.0}, 10.0}});
    CHECK(signed_distance({0.0, 0.0}, p) == doctest::Approx(2.0));
    CHECK_THROWS_AS(Predicate("z", {Halfspace{{0.0, 0.0}, 1.0}}), MtlError);
    CHECK_THROWS_AS(signed_distance({1.0}, p), MtlError);
}

TEST_CASE("horizon") {
    const auto t = box_table();
    const auto a = make_atom(t.at("p"));
    CHECK(horizon(*make_until(Interval(2, 5), a, make_eventually(Interval(0, 3), a))) == 8);
    CHECK(horizon(*parse("F[0,15](p) & G[2,4] F[1,3] q", t)) == 15);
    CHECK(horizon(*parse("!(p | q)", t)) == 0);
}

TEST_CASE("parser errors") {
    const auto t = box_table();
    CHECK_THROWS_WITH_AS(parse("F[10,5](p)", t), doctest::Contains("interval"), MtlError);
    CHECK_THROWS_WITH_AS(parse("F[0,2](r)", t), doctest::Contains("unknown predicate"), ParseError);
    CHECK_THROWS_AS(parse("p & ", t), ParseError);
    CHECK_THROWS_AS(parse("p q", t), ParseError);
    CHECK_THROWS_AS(parse("F[0,](p)", t), ParseError);
    CHECK_THROWS_AS(parse("p", PredicateTable{}), MtlError);
    try {
        parse("p & (q | x)", t);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 9);
    }
}

TEST_CASE("parser precedence and sugar") {
    const auto t = box_table();
    CHECK(structurally_equal(*parse("p | q & p", t), *parse("p | (q & p)", t)));
    CHECK(structurally_equal(*parse("p U[0,2] q U[1,3] p", t), *parse("p U[0,2] (q U[1,3] p)", t)));
    CHECK(structurally_equal(*parse("F[0,3) p", t), *parse("F[0,2] p", t)));
    CHECK(structurally_equal(*parse("false", t), *make_not(make_true())));
    CHECK(structurally_equal(*parse("!!p", t), *make_not(make_not(make_atom(t.at("p"))))));
    CHECK_FALSE(structurally_equal(*parse("F[0,2] p", t), *parse("G[0,2] p", t)));
}

TEST_CASE("printer output is stable") {
    std::ifstream in(std::string(DPMTL_TEST_DATA) + "/formulas.golden");
    REQUIRE(in);
    PredicateTable t = box_table();
    t.emplace("R1", std::make_shared<const Predicate>(Predicate::box("R1", {-10.0}, {10.0})));
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto sep = line.find(" => ");
        REQUIRE(sep != std::string::npos);
        const std::string src = line.substr(0, sep);
        const std::string expected = line.substr(sep + 4);
        CHECK_MESSAGE(to_string(*parse(src, t)) == expected, src);
        ++checked;
    }
    CHECK(checked >= 8);
}

TEST_CASE("printing then parsing gives the same tree") {
    oracle::Rng rng(11);
    for (int k = 0; k < 300; ++k) {
        const auto preds = oracle::random_predicates(rng, 2);
        const auto f = oracle::random_formula(rng, preds, 3, 8);
        const auto g = parse(to_string(*f), preds);
        CHECK(structurally_equal(*f, *g));
        CHECK(to_string(*g) == to_string(*f));
    }
}

TEST_CASE("robustness on a hand trajectory") {
    const auto t = box_table();
    const auto tr = line({3.0, 0.5, 1.5, -0.5, 4.0});
    CHECK(robustness(tr, *parse("p", t), 0) == doctest::Approx(-2.0));
    CHECK(robustness(tr, *parse("F[0,2] p", t), 0) == doctest::Approx(0.5));
    CHECK(robustness(tr, *parse("G[1,3] p", t), 0) == doctest::Approx(-0.5));
    CHECK(robustness(tr, *parse("G[1,3] q", t), 0) == doctest::Approx(-0.5));
    // q holds on [1,2]; p first reached at 1.
    CHECK(robustness(tr, *parse("q U[0,3] p", t), 0) == doctest::Approx(-1.0));
    CHECK(robustness(tr, *parse("q U[1,3] p", t), 0) == doctest::Approx(0.5));
    CHECK(robustness(tr, *parse("true", t), 0) == std::numeric_limits<double>::infinity());
    CHECK(robustness(tr, *parse("false", t), 0) == -std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(robustness(tr, *parse("F[0,5] p", t), 0), MtlError);
    CHECK_THROWS_AS(robustness(tr, *parse("p", t), -1), MtlError);
}

TEST_CASE("robustness matches a direct transcription of the semantics") {
    oracle::Rng rng(5);
    for (int k = 0; k < 400; ++k) {
        const std::size_t dims = k % 2 ? 2 : 1;
        const auto preds = oracle::random_predicates(rng, dims);
        const auto f = oracle::random_formula(rng, preds, 3, 8);
        const auto tr = oracle::random_trajectory(rng, static_cast<std::size_t>(horizon(*f)) + 3, dims);
        for (int t = 0; t < 3; ++t) CHECK(robustness(tr, *f, t) == doctest::Approx(naive_rho(tr, *f, t)).epsilon(1e-12));
    }
}

TEST_CASE("derived operator identities") {
    oracle::Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        const auto preds = oracle::random_predicates(rng, 1);
        const auto f = oracle::random_formula(rng, preds, 2, 4);
        const auto tr = oracle::random_trajectory(rng, static_cast<std::size_t>(horizon(*f)) + 6, 1);
        const Interval iv(1, 4);
        const double ev = robustness(tr, *make_eventually(iv, f), 0);
        CHECK(ev == doctest::Approx(robustness(tr, *make_until(iv, make_true(), f), 0)));
        CHECK(robustness(tr, *make_globally(iv, f), 0) ==
              doctest::Approx(-robustness(tr, *make_eventually(iv, make_not(f)), 0)));
        CHECK(robustness(tr, *make_not(f), 0) == -robustness(tr, *f, 0));
    }
}

TEST_CASE("Boolean and quantitative semantics agree in sign") {
    oracle::Rng rng(3);
    int decided = 0;
    for (int k = 0; k < 500; ++k) {
        const std::size_t dims = k % 2 ? 2 : 1;
        const auto preds = oracle::random_predicates(rng, dims);
        const auto f = oracle::random_formula(rng, preds, 3, 8);
        const auto tr = oracle::random_trajectory(rng, static_cast<std::size_t>(horizon(*f)) + 1, dims);
        const double r = robustness(tr, *f, 0);
        if (std::abs(r) <= 1e-9) continue;
        ++decided;
        CHECK((r > 0) == boolean_sat(tr, *f, 0));
    }
    CHECK(decided > 450);
}

}  // TEST_SUITE
