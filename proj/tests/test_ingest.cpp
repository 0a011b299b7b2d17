#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "exchnet/error.hpp"
#include "exchnet/ingest.hpp"

using namespace exchnet;

namespace {

std::string full_3node_edges =
    "sender,receiver,count\n"
    "a,b,3\n"
    "a,c,1\n"
    "b,a,2\n"
    "b,c,2\n"
    "c,a,4\n"
    "c,b,0\n";

EdgeList edges_from(const std::string& text, bool zero_fill = false) {
    std::istringstream in(text);
    return load_edgelist(in, zero_fill);
}

NodeTable nodes_from(const std::string& text) {
    std::istringstream in(text);
    return load_node_table(in);
}

EdgeTable edge_table_from(const std::string& text) {
    std::istringstream in(text);
    return load_edge_table(in);
}

} // namespace

TEST_CASE("edge list happy path") {
    EdgeList e = edges_from(full_3node_edges);
    REQUIRE(e.node_ids.size() == 3);
    CHECK(e.node_ids[0] == "a");
    CHECK(e.counts[edge_index(1, 2, 3)] == 3);
    CHECK(e.counts[edge_index(3, 1, 3)] == 4);
    CHECK(e.offsets.size() == 0);
}

TEST_CASE("edge list error paths") {
    SUBCASE("missing dyad without zero fill") {
        std::string text = "sender,receiver,count\na,b,1\na,c,1\nb,a,1\nb,c,1\nc,a,1\n";
        CHECK_THROWS_WITH_AS(edges_from(text), doctest::Contains("missing dyad"), Error);
        EdgeList filled = edges_from(text, true);
        CHECK(filled.counts[edge_index(3, 2, 3)] == 0);
    }
    SUBCASE("duplicate dyad") {
        std::string text = full_3node_edges + "a,b,9\n";
        CHECK_THROWS_WITH_AS(edges_from(text), doctest::Contains("duplicate"), Error);
    }
    SUBCASE("negative count") {
        std::string text = "sender,receiver,count\na,b,-1\na,c,1\nb,a,1\nb,c,1\nc,a,1\nc,b,1\n";
        CHECK_THROWS_WITH_AS(edges_from(text), doctest::Contains("negative"), Error);
    }
    SUBCASE("self loop") {
        std::string text = "sender,receiver,count\na,a,1\n";
        CHECK_THROWS_WITH_AS(edges_from(text), doctest::Contains("self-loop"), Error);
    }
    SUBCASE("bad header") {
        CHECK_THROWS_AS(edges_from("from,to,count\na,b,1\n"), Error);
    }
}

TEST_CASE("edge list with offsets") {
    std::string text =
        "sender,receiver,count,offset\n"
        "a,b,3,0.5\na,c,1,0\nb,a,2,-0.25\nb,c,2,0\nc,a,4,1\nc,b,0,0\n";
    EdgeList e = edges_from(text);
    REQUIRE(e.offsets.size() == 6);
    CHECK(e.offsets[edge_index(1, 2, 3)] == 0.5);
    CHECK(e.offsets[edge_index(2, 1, 3)] == -0.25);
}

TEST_CASE("design construction") {
    NodeTable nodes = nodes_from("node,x2,x3\na,1,1.5\nb,0,-0.5\nc,1,2.0\n");
    EdgeTable edges = edge_table_from(
        "sender,receiver,w\na,b,2\na,c,3\nb,a,4\nb,c,5\nc,a,6\nc,b,7\n");
    std::vector<std::string> order = {"a", "b", "c"};

    SUBCASE("term-by-term fixed values") {
        DyadicCovariateSpec spec;
        spec.terms = {{TermKind::Intercept, ""},
                      {TermKind::Product, "x2"},
                      {TermKind::AbsDiff, "x3"},
                      {TermKind::Sender, "x3"},
                      {TermKind::Receiver, "x2"},
                      {TermKind::Edge, "w"},
                      {TermKind::LogEdge, "w"}};
        Eigen::MatrixXd X = build_design(order, nodes, edges, spec);
        int ab = edge_index(1, 2, 3);
        CHECK(X(ab, 0) == 1.0);
        CHECK(X(ab, 1) == 0.0);                       // product with x2_b = 0
        CHECK(X(ab, 2) == doctest::Approx(2.0));      // |1.5 - (-0.5)|
        CHECK(X(ab, 3) == doctest::Approx(1.5));      // sender x3
        CHECK(X(ab, 4) == 0.0);                       // receiver x2
        CHECK(X(ab, 5) == 2.0);
        CHECK(X(ab, 6) == doctest::Approx(std::log(2.0)));
        int ca = edge_index(3, 1, 3);
        CHECK(X(ca, 1) == 1.0);
        CHECK(X(ca, 2) == doctest::Approx(0.5));
    }
    SUBCASE("hand-enumerated matrix on 4 nodes") {
        NodeTable n4 = nodes_from("node,x2,x3\na,1,0\nb,0,1\nc,1,3\nd,1,-1\n");
        EdgeTable e4;  // no edge vars needed
        DyadicCovariateSpec spec;
        spec.terms = {{TermKind::Intercept, ""}, {TermKind::Product, "x2"}, {TermKind::AbsDiff, "x3"}};
        std::vector<std::string> order4 = {"a", "b", "c", "d"};
        Eigen::MatrixXd X = build_design(order4, n4, e4, spec);
        REQUIRE(X.rows() == 12);
        double x2[] = {1, 0, 1, 1};
        double x3[] = {0, 1, 3, -1};
        for (int i = 1; i <= 4; ++i)
            for (int j = 1; j <= 4; ++j) {
                if (i == j) continue;
                int idx = edge_index(i, j, 4);
                CHECK(X(idx, 0) == 1.0);
                CHECK(X(idx, 1) == x2[i - 1] * x2[j - 1]);
                CHECK(X(idx, 2) == doctest::Approx(std::fabs(x3[i - 1] - x3[j - 1])));
            }
    }
    SUBCASE("schema errors") {
        DyadicCovariateSpec bad;
        bad.terms = {{TermKind::Product, "nope"}};
        CHECK_THROWS_WITH_AS(build_design(order, nodes, edges, bad), doctest::Contains("nope"), Error);
        DyadicCovariateSpec bad2;
        bad2.terms = {{TermKind::Edge, "nope"}};
        CHECK_THROWS_AS(build_design(order, nodes, edges, bad2), Error);
    }
    SUBCASE("permutation equivariance") {
        DyadicCovariateSpec spec;
        spec.terms = {{TermKind::Product, "x2"}, {TermKind::AbsDiff, "x3"}, {TermKind::Edge, "w"}};
        Eigen::MatrixXd X = build_design(order, nodes, edges, spec);
        std::vector<std::string> rotated = {"b", "c", "a"};
        Eigen::MatrixXd Xr = build_design(rotated, nodes, edges, spec);
        // row for (i,j) under the original order appears at the permuted position
        std::map<std::string, int> pos = {{"a", 3}, {"b", 1}, {"c", 2}};
        for (int i = 1; i <= 3; ++i)
            for (int j = 1; j <= 3; ++j) {
                if (i == j) continue;
                int from = edge_index(i, j, 3);
                int to = edge_index(pos[order[i - 1]], pos[order[j - 1]], 3);
                CHECK((X.row(from) - Xr.row(to)).cwiseAbs().maxCoeff() == 0.0);
            }
    }
}

TEST_CASE("model spec json") {
    ModelSpec spec = model_spec_from_json(R"({
        "link": "exp",
        "terms": [
            {"kind": "intercept"},
            {"kind": "product", "var": "x2"},
            {"kind": "absdiff", "var": "x3"}
        ],
        "offset": "exposure"
    })");
    CHECK(spec.link == LinkKind::Exponential);
    REQUIRE(spec.covariates.terms.size() == 3);
    CHECK(spec.covariates.terms[1].name() == "x2.product");
    CHECK(spec.offset_var == "exposure");

    CHECK_THROWS_AS(model_spec_from_json("{}"), Error);
    CHECK_THROWS_AS(model_spec_from_json(R"({"terms": [{"kind": "frobnicate"}]})"), Error);
}

TEST_CASE("assemble dataset end to end") {
    EdgeList edges = edges_from(full_3node_edges);
    NodeTable nodes = nodes_from("node,x2,x3\na,1,1.5\nb,0,-0.5\nc,1,2.0\n");
    EdgeTable covs = edge_table_from(
        "sender,receiver,exposure\na,b,2\na,c,1\nb,a,1\nb,c,4\nc,a,1\nc,b,1\n");
    ModelSpec spec = model_spec_from_json(R"({
        "link": "exp",
        "terms": [{"kind": "intercept"}, {"kind": "absdiff", "var": "x3"}],
        "offset": "exposure"
    })");
    RelationalDataset data = assemble_dataset(edges, nodes, covs, spec);
    CHECK(data.n_nodes() == 3);
    CHECK(data.n_covariates() == 2);
    CHECK(data.has_offsets());
    CHECK(data.offsets()[edge_index(1, 2, 3)] == doctest::Approx(std::log(2.0)));
    CHECK(data.coef_names()[1] == "x3.absdiff");
    CHECK(data.node_names()[2] == "c");

    SUBCASE("offsets rejected for non-exponential links") {
        ModelSpec logit = spec;
        logit.link = LinkKind::Logistic;
        CHECK_THROWS_AS(assemble_dataset(edges, nodes, covs, logit), Error);
    }
}
