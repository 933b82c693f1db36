#include <gtest/gtest.h>

#include <set>

#include "paems/equivalence.hpp"

using namespace paems;

TEST(EquivalenceSuite, CoversEveryShapeAndClass) {
    std::vector<EquivalenceCase> suite = equivalence_suite();
    EXPECT_EQ(suite.size(), 3u * 3 * 2 * 9);
    std::set<std::string> names;
    for (const EquivalenceCase &c : suite) {
        names.insert(c.name);
        EXPECT_LE(c.circuit.n_qubits(), 7u);
        EXPECT_NO_THROW(c.model.validate_for(c.circuit));
    }
    EXPECT_EQ(names.size(), suite.size());
    EXPECT_TRUE(names.count("full/n7/r3/X"));
    EXPECT_TRUE(names.count("leakage/n3/r1/Z"));
}

// A quick slice of the suite; the full sweep at 1e5 shots runs in the acceptance binary.
TEST(EquivalenceSuite, SmallCircuitsAgree) {
    for (const EquivalenceCase &c : equivalence_suite()) {
        if (c.circuit.n_qubits() != 3 || c.circuit.rounds() != 2) continue;
        EquivalenceResult r = check_equivalence(c, 20000, 17, 4.0);
        EXPECT_GT(r.n_tests, 0u);
        EXPECT_TRUE(r.passed()) << r.name << " " << r.worst;
    }
}

TEST(EquivalenceCheck, CountsEveryMarginalAndPair) {
    EquivalenceCase c;
    for (const EquivalenceCase &e : equivalence_suite()) {
        if (e.name == "readout/n5/r2/Z") c = e;
    }
    ASSERT_FALSE(c.name.empty());
    // 2 ancillas x 2 rounds + 2 final detectors: 6 marginals and 15 pairs.
    EquivalenceResult r = check_equivalence(c, 20000, 3);
    EXPECT_EQ(r.n_tests, 6u + 15u);
    // With zero tolerance any sampling noise is flagged.
    EquivalenceResult strict = check_equivalence(c, 20000, 3, 0.0);
    EXPECT_GT(strict.n_failures, 0u);
    EXPECT_FALSE(strict.worst.empty());
}
