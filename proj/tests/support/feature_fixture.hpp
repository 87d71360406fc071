#pragma once

// Twelve-commit history whose complete feature vectors were computed by hand
// from the definitions. Times step one day apart so age/rexp come out exact.

#include <memory>
#include <vector>

#include "jitvp/features.hpp"
#include "support/fixture_repo.hpp"

namespace jitvp::testing {

struct FeatureFixture {
    std::shared_ptr<GitFixture> repo;
    std::vector<ExpertFeatureVector> expected;  // one per commit, oldest first
};

inline FeatureFixture build_feature_fixture() {
    FeatureFixture fixture;
    fixture.repo = std::make_shared<GitFixture>("feature_oracle");
    auto& r = *fixture.repo;
    constexpr long long t0 = 1600000000;
    constexpr long long day = 86400;

    const char* alice = "alice@example.com";
    const char* bob = "bob@example.com";
    const char* carol = "carol@example.com";
    const char* dave = "dave@example.com";
    auto commit = [&](const char* message, int day_index, const char* email) {
        r.commit(message, t0 + day_index * day, email, email);
    };

    const double h_third = 0.9182958340544896;  // -(2/3*log2(2/3) + 1/3*log2(1/3))

    // c1: two files added in one directory
    r.write("core/a.c", "a1\na2\na3\na4\n");
    r.write("core/b.c", "b1\nb2\n");
    commit("add core module", 0, alice);
    fixture.expected.push_back({/*ns*/ 1, /*nd*/ 1, /*nf*/ 2, /*entropy*/ h_third, /*la*/ 6,
                                /*ld*/ 0, /*lt*/ 0.0, /*fix*/ 0, /*ndev*/ 0, /*age*/ 0.0,
                                /*nuc*/ 0, /*exp*/ 0, /*rexp*/ 0.0, /*sexp*/ 0});

    // c2: one-line modify of a.c
    r.write("core/a.c", "a1\na2x\na3\na4\n");
    commit("tweak second line", 1, alice);
    fixture.expected.push_back({1, 1, 1, 0.0, 1, 1, 4.0, 0, 1, 1.0, 1, 1, 1.0, 1});

    // c3: new util subsystem by bob
    r.write("util/u.c", "u1\nu2\nu3\n");
    commit("start util", 2, bob);
    fixture.expected.push_back({1, 1, 1, 0.0, 3, 0, 0.0, 0, 0, 0.0, 0, 0, 0.0, 0});

    // c4: alice touches two subsystems
    r.write("core/b.c", "b1\nb2x\n");
    r.write("util/u.c", "u1\nu2\nu3x\n");
    commit("touch b and u", 3, alice);
    fixture.expected.push_back({2, 2, 2, 1.0, 2, 2, 2.5, 0, 2, 2.0, 2, 2, 2.0, 2});

    // c5: bob appends two lines to a.c
    r.write("core/a.c", "a1\na2x\na3\na4\na5\na6\n");
    commit("extend a", 4, bob);
    fixture.expected.push_back({1, 1, 1, 0.0, 2, 0, 4.0, 0, 1, 3.0, 2, 1, 1.0, 0});

    // c6: carol adds a deep file and edits a.c
    r.write("deep/sub/d.c", "d1\n");
    r.write("core/a.c", "a1x\na2x\na3\na4\na5\na6\n");
    commit("deep module plus a1 edit", 5, carol);
    fixture.expected.push_back({2, 2, 2, h_third, 2, 1, 3.0, 0, 2, 0.5, 3, 0, 0.0, 0});

    // c7: fixing commit (strong keyword), deletes a3
    r.write("core/a.c", "a1x\na2x\na4\na5\na6\n");
    commit("fix CVE-2020-0001 denial of service in parser", 6, alice);
    fixture.expected.push_back({1, 1, 1, 0.0, 0, 1, 6.0, 1, 3, 1.0, 4, 3, 3.0, 3});

    // c8: bob edits u.c's first line
    r.write("util/u.c", "u1x\nu2\nu3x\n");
    commit("rename util entry", 7, bob);
    fixture.expected.push_back({1, 1, 1, 0.0, 1, 1, 3.0, 0, 2, 4.0, 2, 2, 2.0, 1});

    // c9: carol adds a second core file
    r.write("core/c.c", "c1\nc2\n");
    commit("second core file", 8, carol);
    fixture.expected.push_back({1, 1, 1, 0.0, 2, 0, 0.0, 0, 0, 0.0, 0, 1, 1.0, 1});

    // c10: three files, (1,1,2) changed-line split -> 1.5 bits
    r.write("core/a.c", "a1x\na2x\na4\na6\n");
    r.write("core/b.c", "b1\nb2x\nb3\n");
    r.write("util/u.c", "u1x\nu2x\nu3x\n");
    commit("drop a5, add b3, tweak u2", 9, alice);
    fixture.expected.push_back({2, 2, 3, 1.5, 2, 2, 10.0 / 3.0, 0, 3, 11.0 / 3.0, 8, 4, 4.0, 4});

    // c11: fixing commit (medium keyword), deletes u3x
    r.write("util/u.c", "u1x\nu2x\n");
    commit("prevent overflow in util parser", 10, bob);
    fixture.expected.push_back({1, 1, 1, 0.0, 0, 1, 3.0, 1, 2, 1.0, 4, 3, 3.0, 2});

    // c12: brand-new author edits the deep file
    r.write("deep/sub/d.c", "d1x\n");
    commit("edit d1", 11, dave);
    fixture.expected.push_back({1, 1, 1, 0.0, 1, 1, 1.0, 0, 1, 6.0, 1, 0, 0.0, 0});

    return fixture;
}

}  // namespace jitvp::testing
