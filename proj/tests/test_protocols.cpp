#include <doctest.h>

#include <cmath>

#include "mfp/protocols.hpp"

using namespace mfp;

TEST_SUITE_BEGIN("protocols");

TEST_CASE("protocol shapes") {
    const auto f = ProtocolSpec::fifteen_to_one();
    CHECK(f.n_inputs() == 15);
    CHECK(f.n_outputs() == 1);
    const auto b4 = ProtocolSpec::block(4);
    CHECK(b4.n_inputs() == 20);
    CHECK(b4.n_outputs() == 4);
    CHECK_THROWS_AS(ProtocolSpec::block(3), invalid_parameter);
    CHECK_THROWS_AS(ProtocolSpec::block(0), invalid_parameter);
    CHECK_THROWS_AS(ProtocolSpec::block(-2), invalid_parameter);
}

TEST_CASE("transversal-operator condition holds for k = 2 + 4j only") {
    CHECK(ProtocolSpec::block(2).transversal_condition_met());
    CHECK(ProtocolSpec::block(6).transversal_condition_met());
    CHECK(!ProtocolSpec::block(4).transversal_condition_met());
    CHECK(!ProtocolSpec::block(8).transversal_condition_met());
    CHECK(ProtocolSpec::fifteen_to_one().transversal_condition_met());
}

TEST_CASE("output error maps") {
    CHECK(output_error(ProtocolSpec::fifteen_to_one(), 1e-3) ==
          doctest::Approx(3.5e-8).epsilon(1e-12));
    CHECK(output_error(ProtocolSpec::block(4), 1e-2) ==
          doctest::Approx(1.3e-3).epsilon(1e-12));
    // Vanishes with the input error.
    CHECK(output_error(ProtocolSpec::fifteen_to_one(), 1e-30) <= 1e-80);
    CHECK(output_error(ProtocolSpec::block(2), 1e-30) <= 1e-50);
    // Clamp.
    CHECK(output_error(ProtocolSpec::block(128), 0.9) == doctest::Approx(1.0));
}

TEST_CASE("required input error matches the published chain values") {
    const auto f = ProtocolSpec::fifteen_to_one();
    const double top = required_input_error(f, 1e-15, 1.0);
    CHECK(std::abs(top - 2.4e-6) / 2.4e-6 < 0.02);
    const double second = required_input_error(f, 2.4e-6, 1.0);
    CHECK(std::abs(second - 3.3e-3) / 3.3e-3 < 0.02);
    // sqrt(2.6e-7 / 26) = 1e-4 exactly.
    CHECK(required_input_error(ProtocolSpec::block(4), 2.6e-7, 1.0) ==
          doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("required input error inverts the output map at target/(1+eps)") {
    for (const auto& spec : {ProtocolSpec::fifteen_to_one(), ProtocolSpec::block(2),
                             ProtocolSpec::block(4), ProtocolSpec::block(32),
                             ProtocolSpec::block(128)}) {
        for (double eps : {0.05, 0.5, 1.0, 7.3, 32.0}) {
            for (double t = 1e-20; t <= 1e-2; t *= 100.0) {
                const double p = required_input_error(spec, t, eps);
                CHECK(output_error(spec, p) ==
                      doctest::Approx(t / (1.0 + eps)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("maps are strictly monotone") {
    for (const auto& spec : {ProtocolSpec::fifteen_to_one(), ProtocolSpec::block(6)}) {
        double prev_out = 0.0;
        double prev_req = 0.0;
        for (double p = 1e-12; p < 1e-2; p *= 10.0) {
            const double out = output_error(spec, p);
            CHECK(out > prev_out);
            prev_out = out;
            const double req = required_input_error(spec, p, 1.0);
            CHECK(req > prev_req);
            prev_req = req;
        }
    }
}

TEST_CASE("geometric volumes") {
    CHECK(geometric_volume(ProtocolSpec::fifteen_to_one()) == 192.0);
    CHECK(geometric_volume(ProtocolSpec::block(4)) == 600.0);
    CHECK(geometric_volume(ProtocolSpec::block(2)) == 408.0);
    // One repeated unit cell per pair of outputs.
    for (int k = 4; k <= 128; k += 2) {
        CHECK(geometric_volume(ProtocolSpec::block(k)) -
                  geometric_volume(ProtocolSpec::block(k - 2)) ==
              192.0);
    }
}

TEST_CASE("rejection estimates") {
    CHECK(rejection_probability(ProtocolSpec::block(4), 1e-3) ==
          doctest::Approx(0.020).epsilon(1e-12));
    CHECK(rejection_probability(ProtocolSpec::fifteen_to_one(), 1e-2) ==
          doctest::Approx(0.15).epsilon(1e-12));
    CHECK(rejection_probability(ProtocolSpec::block(2), 1e-30) <= 1e-28);
    CHECK(rejection_estimate_valid(ProtocolSpec::fifteen_to_one(), 1e-2));
    CHECK(!rejection_estimate_valid(ProtocolSpec::block(128), 1e-3));
}

TEST_SUITE_END();
