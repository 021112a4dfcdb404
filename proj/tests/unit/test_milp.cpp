#include <doctest.h>

#include <sstream>

#include "dpmtl/milp.hpp"
#include "oracles.hpp"

using namespace dpmtl::milp;

TEST_SUITE("milp") {

TEST_CASE("linear expressions keep sorted, merged terms") {
    Model m;
    const VarId x = m.add_continuous("x");
    const VarId y = m.add_continuous("y");
    LinearExpr e = LinearExpr(y, 2.0) + LinearExpr(x, 1.0) + 3.0;
    e.add(y, -2.0);
    REQUIRE(e.terms().size() == 1);
    CHECK(e.terms()[0].first == x.index);
    CHECK(e.constant() == 3.0);
    CHECK((2.0 * e - LinearExpr(x)).evaluate({5.0, 7.0}) == doctest::Approx(11.0));
    CHECK((-e).constant() == -3.0);
    CHECK(LinearExpr(4.0).is_constant());
}

TEST_CASE("small LPs") {
    SUBCASE("two-variable vertex") {
        Model m;
        const VarId x = m.add_continuous("x");
        const VarId y = m.add_continuous("y");
        m.add_constraint(LinearExpr(x) + 2.0 * LinearExpr(y), Relation::LessEqual, 4.0);
        m.add_constraint(3.0 * LinearExpr(x) + LinearExpr(y), Relation::LessEqual, 6.0);
        m.set_objective(-LinearExpr(x) - LinearExpr(y));
        const Solution s = solve_lp(m);
        REQUIRE(s.optimal());
        CHECK(s.objective == doctest::Approx(-2.8));
        CHECK(s.value(x) == doctest::Approx(1.6));
        CHECK(s.value(y) == doctest::Approx(1.2));
    }
    SUBCASE("infeasible") {
        Model m;
        const VarId x = m.add_continuous("x", -kInfinity, kInfinity);
        m.add_constraint(LinearExpr(x), Relation::GreaterEqual, 2.0);
        m.add_constraint(LinearExpr(x), Relation::LessEqual, 1.0);
        CHECK(solve_lp(m).status == Status::Infeasible);
        CHECK(solve_milp(m).status == Status::Infeasible);
    }
    SUBCASE("unbounded") {
        Model m;
        const VarId x = m.add_continuous("x");
        m.set_objective(-LinearExpr(x));
        CHECK(solve_lp(m).status == Status::Unbounded);
    }
    SUBCASE("free variables and equalities") {
        Model m;
        const VarId x = m.add_continuous("x", -kInfinity, kInfinity);
        const VarId y = m.add_continuous("y", -kInfinity, kInfinity);
        m.add_constraint(LinearExpr(x) - LinearExpr(y), Relation::Equal, -3.0);
        m.add_constraint(LinearExpr(y), Relation::LessEqual, 1.0);
        m.set_objective(-LinearExpr(x));
        const Solution s = solve_lp(m);
        REQUIRE(s.optimal());
        CHECK(s.value(x) == doctest::Approx(-2.0));
        CHECK(max_violation(m, s.values) < 1e-9);
    }
    SUBCASE("constant rows") {
        Model m;
        m.add_continuous("x", 0.0, 1.0);
        m.add_constraint(LinearExpr(2.0), Relation::LessEqual, 1.0);
        CHECK(solve_lp(m).status == Status::Infeasible);
    }
}

TEST_CASE("random bounded LPs agree with vertex enumeration") {
    oracle::Rng rng(17);
    for (int k = 0; k < 150; ++k) {
        const Model m = oracle::random_milp(rng, 0, oracle::uniform_int(rng, 1, 4), oracle::uniform_int(rng, 1, 6));
        const auto ref = oracle::brute_force_milp(m);
        const Solution s = solve_lp(m);
        REQUIRE(s.status != Status::Unbounded);
        CHECK(s.optimal() == ref.has_value());
        if (ref && s.optimal()) {
            CHECK(s.objective == doctest::Approx(*ref).epsilon(1e-9));
            CHECK(max_violation(m, s.values) < 1e-7);
        }
    }
}

TEST_CASE("random MILPs agree with enumeration") {
    oracle::Rng rng(23);
    for (int k = 0; k < 60; ++k) {
        const Model m = oracle::random_milp(rng, oracle::uniform_int(rng, 1, 8), oracle::uniform_int(rng, 0, 3),
                                           oracle::uniform_int(rng, 1, 6));
        const auto ref = oracle::brute_force_milp(m);
        const Solution s = solve_milp(m);
        CHECK(s.optimal() == ref.has_value());
        if (ref && s.optimal()) {
            CHECK(std::abs(s.objective - *ref) <= 1e-6);
            CHECK(max_violation(m, s.values) < 1e-6);
            for (std::size_t j = 0; j < m.num_variables(); ++j) {
                if (m.variables()[j].kind == VarKind::Binary) CHECK((s.values[j] == 0.0 || s.values[j] == 1.0));
            }
        }
    }
}

TEST_CASE("knapsack") {
    const double w[] = {12, 7, 11, 8, 9};
    const double v[] = {24, 13, 23, 15, 16};
    Model m;
    LinearExpr weight, value;
    for (int k = 0; k < 5; ++k) {
        const VarId z = m.add_binary("z" + std::to_string(k));
        weight.add(z, w[k]);
        value.add(z, -v[k]);
    }
    m.add_constraint(weight, Relation::LessEqual, 26.0);
    m.set_objective(value);
    const Solution s = solve_milp(m);
    REQUIRE(s.optimal());
    CHECK(s.objective == doctest::Approx(-51.0));
    CHECK(s.nodes >= 1);
}

TEST_CASE("node limit keeps the incumbent") {
    oracle::Rng rng(2);
    Model m;
    LinearExpr weight, value;
    for (int k = 0; k < 30; ++k) {
        const VarId z = m.add_binary("z" + std::to_string(k));
        weight.add(z, oracle::uniform_int(rng, 20, 40) + 0.37);
        value.add(z, -oracle::uniform_int(rng, 20, 40) - 0.11);
    }
    m.add_constraint(weight, Relation::LessEqual, 301.0);
    m.set_objective(value);
    SolverOptions opt;
    opt.node_limit = 3;
    try {
        solve_milp(m, opt);
        FAIL("expected the node limit to trigger");
    } catch (const NodeLimitError& e) {
        if (e.has_incumbent()) CHECK(max_violation(m, e.incumbent().values) < 1e-6);
    }
}

TEST_CASE("model validation and LP text") {
    Model m;
    const VarId x = m.add_continuous("x", 0.0, 2.0);
    const VarId z = m.add_binary("z");
    CHECK_THROWS(m.set_bounds(x, 3.0, 1.0));
    CHECK_THROWS(m.add_constraint(LinearExpr(VarId{7}), Relation::LessEqual, 1.0));
    m.add_constraint(LinearExpr(x) - 2.0 * LinearExpr(z), Relation::LessEqual, 0.0, "link");
    m.set_objective(LinearExpr(z) - LinearExpr(x));
    std::ostringstream os;
    m.write_lp(os);
    const std::string text = os.str();
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("link") != std::string::npos);
    CHECK(text.find("Binaries") != std::string::npos);
    const Solution s = solve_milp(m);
    REQUIRE(s.optimal());
    CHECK(s.objective == doctest::Approx(-1.0));
}

}  // TEST_SUITE
