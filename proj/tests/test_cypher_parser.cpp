#include <cctype>
#include <random>

#include <gtest/gtest.h>

#include "kgchat/cypher/lexer.hpp"
#include "kgchat/cypher/parser.hpp"
#include "support.hpp"

namespace kgchat::cypher {
namespace {

// Every token is the exact source slice at its offset and only whitespace
// sits between tokens.
void expect_reconstructs(std::string_view text) {
  const auto tokens = tokenize(text);
  std::size_t pos = 0;
  for (const auto& t : tokens) {
    ASSERT_GE(t.offset, pos) << text;
    for (std::size_t i = pos; i < t.offset; ++i) ASSERT_TRUE(std::isspace(static_cast<unsigned char>(text[i]))) << text;
    ASSERT_EQ(text.substr(t.offset, t.text.size()), t.text);
    pos = t.offset + t.text.size();
  }
  for (std::size_t i = pos; i < text.size(); ++i) ASSERT_TRUE(std::isspace(static_cast<unsigned char>(text[i])));
}

TEST(LexerTest, ReturnClause) {
  const std::vector<Token> expected{{TokenKind::Keyword, "RETURN", 0},
                                    {TokenKind::Identifier, "n", 7},
                                    {TokenKind::Symbol, ".", 8},
                                    {TokenKind::Identifier, "sentiment", 9}};
  EXPECT_EQ(tokenize("RETURN n.sentiment"), expected);
}

TEST(LexerTest, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(LexerTest, UnknownCharacterReportsOffset) {
  try {
    tokenize("MATCH @");
    FAIL() << "expected LexError";
  } catch (const LexError& e) {
    EXPECT_EQ(e.offset(), 6u);
  }
}

TEST(LexerTest, KeywordsAreCaseInsensitive) {
  const auto tokens = tokenize("match (n) return n.title");
  EXPECT_TRUE(tokens[0].is_keyword("MATCH"));
  EXPECT_EQ(tokens[0].text, "match");
  EXPECT_TRUE(tokens[4].is_keyword("RETURN"));
}

TEST(LexerTest, LiteralsAndCompoundSymbols) {
  const auto tokens = tokenize("a <> 1.5e3 <= 'it\\'s' >= -2");
  EXPECT_EQ(tokens[1].text, "<>");
  EXPECT_EQ(tokens[2].kind, TokenKind::Float);
  EXPECT_EQ(tokens[3].text, "<=");
  EXPECT_EQ(tokens[4].kind, TokenKind::Text);
  EXPECT_EQ(unquote(tokens[4]), "it's");
  EXPECT_EQ(tokens[5].text, ">=");
}

TEST(LexerTest, UnterminatedStringFails) { EXPECT_THROW(tokenize("RETURN 'abc"), LexError); }

TEST(LexerTest, WriteKeywords) {
  for (const char* kw : {"CREATE", "MERGE", "DELETE", "DETACH", "SET", "REMOVE", "DROP", "CALL", "LOAD", "FOREACH"}) {
    EXPECT_TRUE(is_write_keyword(kw)) << kw;
  }
  EXPECT_FALSE(is_write_keyword("MATCH"));
}

TEST(LexerTest, ReferenceQueriesReconstruct) {
  expect_reconstructs(testing::kSimilarityQuery);
  expect_reconstructs(testing::kSentimentQuery);
  expect_reconstructs(testing::kTopicQueryUnbound);
  expect_reconstructs("MATCH (a:Article)\n  WHERE a.title = 'x y'\tRETURN a.title");
}

TEST(LexerTest, RandomQueriesReconstruct) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 300; ++i) expect_reconstructs(testing::random_query(rng));
}

TEST(ParserTest, SentimentQuery) {
  const QueryAst ast = parse_query(testing::kSentimentQuery);
  ASSERT_EQ(ast.match.size(), 1u);
  EXPECT_EQ(ast.match[0].start.variable, "n");
  EXPECT_EQ(ast.match[0].start.label, "Article");
  EXPECT_TRUE(ast.match[0].hops.empty());
  ASSERT_TRUE(ast.where);
  EXPECT_EQ(*ast.where, Expr::make_compare(CompareOp::Eq, Expr::make_property("n", "article_id"),
                                           Expr::make_literal(PropertyValue(100))));
  ASSERT_EQ(ast.returns.size(), 1u);
  EXPECT_EQ(ast.returns[0].column_name(), "n.sentiment");
  EXPECT_FALSE(ast.limit);
}

TEST(ParserTest, SimilarityQuery) {
  const QueryAst ast = parse_query(testing::kSimilarityQuery);
  ASSERT_EQ(ast.match.size(), 2u);
  EXPECT_EQ(ast.match[0].start.properties.at(0), (std::pair<std::string, PropertyValue>{"article_id", 100}));
  ASSERT_EQ(ast.with.size(), 1u);
  ASSERT_EQ(ast.with[0].items.size(), 3u);
  const Expr call = Expr::make_call("gds.similarity.cosine", {Expr::make_property("a1", "content_vector"),
                                                              Expr::make_property("a2", "content_vector")});
  EXPECT_EQ(ast.with[0].items[2].expr, call);
  EXPECT_EQ(ast.with[0].items[2].alias, "similarity_score");
  ASSERT_EQ(ast.order_by.size(), 1u);
  EXPECT_TRUE(ast.order_by[0].descending);
  EXPECT_EQ(ast.limit, 5);
}

TEST(ParserTest, TopicQueryWithRelationship) {
  const QueryAst ast = parse_query(testing::kTopicQuery);
  ASSERT_EQ(ast.match[1].hops.size(), 1u);
  EXPECT_EQ(ast.match[1].hops[0].first.kind, "HAS_TOPIC");
  EXPECT_EQ(ast.match[1].hops[0].first.direction, RelPattern::Direction::Right);
  EXPECT_EQ(ast.match[1].hops[0].second.label, "Topic");
  ASSERT_TRUE(ast.with[0].where);
  EXPECT_EQ(ast.returns[2].column_name(), "predicted_topic");
}

TEST(ParserTest, MissingParenReportsExpectation) {
  try {
    parse_query("MATCH (n:Article RETURN n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.expected(), "')'");
    EXPECT_EQ(e.offset(), 17u);
  }
}

TEST(ParserTest, SyntaxErrors) {
  for (const char* q : {"MATCH", "MATCH (n) RETURN", "RETURN 1", "MATCH (n) RETURN n.title LIMIT",
                        "MATCH (n) WITH n.title RETURN 1", "MATCH (n)-[:HAS_TOPIC]-(m) RETURN 1",
                        "MATCH (n) RETURN n.a.b", "MATCH (n) RETURN n.title ORDER n.title",
                        "MATCH (n) RETURN n.title LIMIT 99999999999999999999", "MATCH (n) RETURN n.title extra"}) {
    EXPECT_THROW(parse_query(q), ParseError) << q;
  }
}

TEST(ParserTest, BooleanPrecedence) {
  const QueryAst ast = parse_query("MATCH (n) WHERE NOT n.title = 'a' OR n.title = 'b' AND n.country = 'c' RETURN 1");
  ASSERT_TRUE(ast.where);
  EXPECT_EQ(ast.where->kind, Expr::Kind::Or);
  EXPECT_EQ(ast.where->args[0].kind, Expr::Kind::Not);
  EXPECT_EQ(ast.where->args[1].kind, Expr::Kind::And);
}

TEST(ParserTest, UnparseIsCanonical) {
  const QueryAst ast = parse_query("match (a:Article{article_id:100})  return a.title as t order by t asc limit 3");
  EXPECT_EQ(unparse(ast), "MATCH (a:Article {article_id: 100}) RETURN a.title AS t ORDER BY t LIMIT 3");
}

TEST(ParserTest, RoundTripOnReferenceQueries) {
  for (auto q : {testing::kSimilarityQuery, testing::kSentimentQuery, testing::kTopicQueryUnbound, testing::kTopicQuery}) {
    const QueryAst ast = parse_query(q);
    EXPECT_EQ(parse_query(unparse(ast)), ast) << q;
  }
}

TEST(ParserTest, RoundTripOnGeneratedQueries) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 500; ++i) {
    const std::string q = testing::random_query(rng);
    const QueryAst ast = parse_query(q);
    const std::string canonical = unparse(ast);
    EXPECT_EQ(parse_query(canonical), ast) << q;
    EXPECT_EQ(unparse(parse_query(canonical)), canonical);
  }
}

TEST(ParserTest, RoundTripOnConstructedLiterals) {
  QueryAst ast = parse_query("MATCH (n:Article) RETURN n.title");
  const std::vector<PropertyValue> literals{PropertyValue(0.1),        PropertyValue(-2.5e-300),
                                            PropertyValue(1e21),       PropertyValue(std::int64_t{-9}),
                                            PropertyValue("a'b\\c\"d"), PropertyValue(true),
                                            PropertyValue(),           PropertyValue(FloatVector{1.0, -0.5})};
  for (const auto& lit : literals) {
    ast.where = Expr::make_compare(CompareOp::Ge, Expr::make_property("n", "compound"), Expr::make_literal(lit));
    EXPECT_EQ(parse_query(unparse(ast)), ast) << unparse(ast);
  }
}

}  // namespace
}  // namespace kgchat::cypher
