#include "opls/error.hpp"
#include "opls/model.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace opls;

namespace {

constexpr const char* kSmall = R"(
model small
# comment line
latent B
indicators A: a1, a2
indicators B: b1
indicators C: c1, c2, c3
path A -> B
path B -> C   # trailing comment
path A -> C
)";

std::string mobile_path() { return std::string(OPLS_SOURCE_DIR) + "/data/ecsi_mobile.model"; }

} // namespace

TEST(ModelParse, OrdersLatentsAndBuildsMatrices) {
    const auto m = parse_model(kSmall);
    EXPECT_EQ(m.name(), "small");
    EXPECT_EQ(m.latent_names(), (std::vector<std::string>{"A", "B", "C"}));
    EXPECT_EQ(m.exogenous_count(), 1u);
    EXPECT_EQ(m.endogenous_count(), 2u);
    EXPECT_EQ(m.indicator_count(), 6u);
    EXPECT_EQ(m.indicator_names(), (std::vector<std::string>{"a1", "a2", "b1", "c1", "c2", "c3"}));
    EXPECT_EQ(m.block_offset(2), 3u);
    EXPECT_EQ(m.owner(4), 2u);
    EXPECT_EQ(m.edge_count(), 3u);

    Eigen::Matrix3d t;
    t << 0, 0, 0, 1, 0, 0, 1, 1, 0;
    EXPECT_EQ(m.inner(), Eigen::MatrixXd(t));
    EXPECT_EQ(m.predecessors(2), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(m.weight_pattern().rows(), 6);
    EXPECT_EQ(m.weight_pattern().cols(), 3);
    EXPECT_EQ(m.weight_pattern().sum(), 6.0);
    EXPECT_EQ(m.weight_pattern()(2, 1), 1.0);
    EXPECT_EQ(m.latent_index("C"), 2u);
    EXPECT_THROW(m.latent_index("Z"), InputError);
}

TEST(ModelParse, DeclarationOrderDoesNotMatter) {
    const auto m = parse_model(R"(
indicators Out: o1
indicators Mid: m1
indicators In: i1
path Mid -> Out
path In -> Mid
)");
    EXPECT_EQ(m.latent_names(), (std::vector<std::string>{"In", "Mid", "Out"}));
    // Strictly lower triangular.
    EXPECT_EQ(Eigen::MatrixXd(m.inner().triangularView<Eigen::Upper>()).sum(), 0.0);
}

TEST(ModelParse, RejectsCycles) {
    const char* text = R"(
indicators A: a
indicators B: b
indicators C: c
indicators D: d
path D -> A
path A -> B
path B -> C
path C -> A
)";
    try {
        parse_model(text);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("non-recursive"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_model("indicators A: a\npath A -> A\n"), InputError);
}

TEST(ModelParse, RejectsBadInput) {
    // Unknown latent in a path.
    EXPECT_THROW(parse_model("indicators A: a\nindicators B: b\npath A -> Q\n"), InputError);
    // Empty block.
    EXPECT_THROW(parse_model("indicators A:\nindicators B: b\npath A -> B\n"), InputError);
    // Declared latent without a block.
    EXPECT_THROW(parse_model("latent C\nindicators A: a\nindicators B: b\npath A -> B\n"), InputError);
    // Indicator shared by two blocks.
    EXPECT_THROW(parse_model("indicators A: a\nindicators B: a\npath A -> B\n"), InputError);
    // Exogenous with an incoming path.
    EXPECT_THROW(parse_model("latent B exogenous\nindicators A: a\nindicators B: b\npath A -> B\n"),
                 InputError);
    EXPECT_THROW(parse_model("indicators A: a\nwhatever\n"), InputError);
    EXPECT_THROW(parse_model(""), InputError);
}

TEST(ModelParse, ErrorsCarryLineNumbers) {
    try {
        parse_model("model x\n\nbogus line\n");
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(ModelParse, SerializeRoundTrip) {
    const auto m = parse_model(kSmall);
    const auto again = parse_model(serialize_model(m));
    EXPECT_EQ(again.name(), m.name());
    EXPECT_EQ(again.latent_names(), m.latent_names());
    EXPECT_EQ(again.indicator_names(), m.indicator_names());
    EXPECT_EQ(again.inner(), m.inner());
    EXPECT_EQ(serialize_model(again), serialize_model(m));
}

TEST(ModelParse, MobilePhoneModel) {
    const auto m = read_model_file(mobile_path());
    EXPECT_EQ(m.exogenous_count(), 1u);
    EXPECT_EQ(m.endogenous_count(), 6u);
    EXPECT_EQ(m.edge_count(), 12u);
    std::vector<std::size_t> sizes;
    for (std::size_t j = 0; j < m.latent_count(); ++j) {
        sizes.push_back(m.block_size(j));
    }
    EXPECT_EQ(sizes, (std::vector<std::size_t>{5, 3, 7, 2, 3, 1, 3}));
    EXPECT_EQ(m.indicator_count(), 24u);

    // Equal initial weights: the single-indicator block gets 1, the
    // seven-indicator block 1/7.
    const auto q = m.latent_index("Quality");
    EXPECT_EQ(m.block_size(q), 7u);
    EXPECT_EQ(m.block_size(m.latent_index("Complaints")), 1u);
}

TEST(ModelParse, MissingFile) {
    EXPECT_THROW(read_model_file("/nonexistent/model.txt"), InputError);
}

TEST(Data, LoadReordersColumnsAndInfersKinds) {
    const auto m = parse_model(kSmall);
    const std::string csv =
        "c3,extra,b1,a1,c1,a2,c2\n"
        "1,9,2.5,1,2,3,1\n"
        "2,9,3.5,2,3,1,2\n"
        "3,9,1.0,3,1,2,3\n"
        "1,9,0.5,1,2,2,1\n";
    const auto d = load_data(csv, m);
    EXPECT_EQ(d.names, m.indicator_names());
    EXPECT_EQ(d.rows(), 4u);
    EXPECT_EQ(d.values(0, 0), 1.0);   // a1
    EXPECT_EQ(d.values(1, 2), 3.5);   // b1
    EXPECT_EQ(d.values(2, 5), 3.0);   // c3
    EXPECT_EQ(d.kinds[2], ColumnKind::interval);
    EXPECT_EQ(d.kinds[0], ColumnKind::ordinal);
    EXPECT_FALSE(d.all_ordinal());
    EXPECT_EQ(d.max_category(3), 3);
    EXPECT_EQ(d.ordinal_column(1), (std::vector<int>{3, 1, 2, 2}));

    const auto forced = load_data(csv, m, KindHint::interval);
    EXPECT_EQ(forced.kinds[0], ColumnKind::interval);
    EXPECT_THROW(load_data(csv, m, KindHint::ordinal), InputError);
}

TEST(Data, RejectsMalformedRows) {
    const auto m = parse_model(kSmall);
    const std::string header = "a1,a2,b1,c1,c2,c3\n";
    try {
        load_data(header + "1,2,3,1,2,3\n1,,3,1,2,3\n1,2,3,1,2,3\n", m);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_data(header + "1,2,x,1,2,3\n1,2,3,1,2,3\n1,2,3,1,2,3\n", m), InputError);
    EXPECT_THROW(load_data(header + "1,2,3,1,2\n", m), InputError);
    EXPECT_THROW(load_data("a1,a2,b1,c1,c2\n1,2,3,1,2\n1,2,3,1,2\n1,2,3,1,2\n", m), InputError);
    // Fewer than three observations.
    EXPECT_THROW(load_data(header + "1,2,3,1,2,3\n1,2,3,1,2,3\n", m), InputError);
}

TEST(Data, MakeDataValidates) {
    Eigen::MatrixXd v(3, 2);
    v << 1, 0.5, 2, 1.5, 3, 2.5;
    EXPECT_NO_THROW(make_data(v, {"x", "y"}, {ColumnKind::ordinal, ColumnKind::interval}));
    EXPECT_THROW(make_data(v, {"x", "y"}, {ColumnKind::ordinal, ColumnKind::ordinal}), InputError);
    EXPECT_THROW(make_data(v, {"x"}, {ColumnKind::ordinal}), InputError);
    v(1, 1) = std::nan("");
    EXPECT_THROW(make_data(v, {"x", "y"}, {ColumnKind::ordinal, ColumnKind::interval}), InputError);
}
