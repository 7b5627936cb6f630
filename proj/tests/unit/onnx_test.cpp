/*
 * Copyright 2026 The Layerwise Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "graph_builder.hpp"
#include "layerwise/backend/onnx_graph.hpp"
#include "layerwise/backend/tensor.hpp"
#include "layerwise/common.hpp"
#include "layerwise/parallel.hpp"

namespace layerwise::backend {
namespace {

using testing::Attr;
using testing::GraphBuilder;

Tensor run_one(const GraphBuilder& g, const TensorMap& feeds, const std::string& fetch) {
  const OnnxGraph graph = OnnxGraph::from_bytes(g.serialize());
  return graph.run(feeds, {fetch}).at(fetch);
}

void expect_floats(const Tensor& t, const Shape& shape, const std::vector<float>& values, float tol = 1e-6f) {
  ASSERT_EQ(t.shape, shape);
  ASSERT_EQ(t.f.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) EXPECT_NEAR(t.f[i], values[i], tol) << "at " << i;
}

TEST(Tensor, Basics) {
  EXPECT_EQ(numel({2, 3, 4}), 24);
  EXPECT_EQ(numel({}), 1);
  const Tensor t = Tensor::ints({3}, {4, 5, 6});
  EXPECT_EQ(t.to_ints(), (std::vector<std::int64_t>{4, 5, 6}));
  EXPECT_EQ(Tensor::scalar(2.5f).double_at(0), 2.5);
  EXPECT_EQ(shape_string({1, 2}), "[1,2]");
}

TEST(OnnxOps, BroadcastArithmetic) {
  GraphBuilder g;
  g.input("a", {2, 3});
  g.floats("b", {3}, {10, 20, 30});
  g.floats("two", {}, {2});
  g.node("Add", {"a", "b"}, {"s"});
  g.node("Mul", {"s", "two"}, {"m"});
  g.node("Sub", {"m", "a"}, {"d"});
  g.node("Div", {"d", "two"}, {"q"});
  g.output("q");
  const Tensor a = Tensor::floats({2, 3}, {1, 2, 3, 4, 5, 6});
  // ((a + b) * 2 - a) / 2 = a / 2 + b
  expect_floats(run_one(g, {{"a", a}}, "q"), {2, 3}, {10.5f, 21, 31.5f, 12, 22.5f, 33});
}

TEST(OnnxOps, MatMulBatchedAndGemm) {
  GraphBuilder g;
  g.input("x", {2, 2, 3});
  g.floats("w", {3, 2}, {1, 0, 0, 1, 1, 1});
  g.node("MatMul", {"x", "w"}, {"y"});
  g.input("p", {2, 3});
  g.floats("wt", {2, 3}, {1, 0, 1, 0, 1, 1});
  g.floats("c", {2}, {100, 200});
  g.node("Gemm", {"p", "wt", "c"}, {"gy"}, {{"transB", std::int64_t{1}}, {"alpha", 2.0f}});
  g.output("y");
  g.output("gy");
  const OnnxGraph graph = OnnxGraph::from_bytes(g.serialize());
  const auto out = graph.run({{"x", Tensor::floats({2, 2, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12})},
                              {"p", Tensor::floats({2, 3}, {1, 2, 3, 4, 5, 6})}},
                             {"y", "gy"});
  expect_floats(out.at("y"), {2, 2, 2}, {4, 5, 10, 11, 16, 17, 22, 23});
  expect_floats(out.at("gy"), {2, 2}, {108, 210, 120, 222});
}

TEST(OnnxOps, SoftmaxAndLayerNorm) {
  GraphBuilder g;
  g.input("x", {2, 3});
  g.floats("gamma", {3}, {1, 2, 3});
  g.floats("beta", {3}, {0, 0, 1});
  g.node("Softmax", {"x"}, {"sm"}, {{"axis", std::int64_t{-1}}});
  g.node("LayerNormalization", {"x", "gamma", "beta"}, {"ln"}, {{"axis", std::int64_t{-1}}, {"epsilon", 1e-5f}});
  g.output("sm");
  g.output("ln");
  const OnnxGraph graph = OnnxGraph::from_bytes(g.serialize());
  const auto out = graph.run({{"x", Tensor::floats({2, 3}, {1, 2, 3, 0, 0, 0})}}, {"sm", "ln"});
  const double e = std::exp(1.0), z = 1 + e + e * e;
  expect_floats(out.at("sm"), {2, 3},
                {static_cast<float>(1 / z), static_cast<float>(e / z), static_cast<float>(e * e / z), 1.f / 3, 1.f / 3,
                 1.f / 3});
  const double inv = 1.0 / std::sqrt(2.0 / 3.0 + 1e-5);
  expect_floats(out.at("ln"), {2, 3},
                {static_cast<float>(-inv), 0.0f, static_cast<float>(3 * inv + 1), 0, 0, 1}, 1e-5f);
}

TEST(OnnxOps, ConvWithStrideAndPadding) {
  GraphBuilder g;
  g.input("x", {1, 1, 4, 4});
  g.floats("w", {2, 1, 2, 2}, {1, 1, 1, 1, 1, 0, 0, -1});
  g.floats("b", {2}, {0, 0.5f});
  g.node("Conv", {"x", "w", "b"}, {"y"}, {{"strides", std::vector<std::int64_t>{2, 2}}});
  g.node("Conv", {"x", "w"}, {"yp"},
         {{"pads", std::vector<std::int64_t>{1, 1, 0, 0}}, {"strides", std::vector<std::int64_t>{3, 3}}});
  g.output("y");
  g.output("yp");
  std::vector<float> xv(16);
  for (int i = 0; i < 16; ++i) xv[static_cast<std::size_t>(i)] = static_cast<float>(i);
  const OnnxGraph graph = OnnxGraph::from_bytes(g.serialize());
  const auto out = graph.run({{"x", Tensor::floats({1, 1, 4, 4}, xv)}}, {"y", "yp"});
  // Sums of 2x2 blocks, and top-left minus bottom-right (+0.5).
  expect_floats(out.at("y"), {1, 2, 2, 2}, {10, 18, 42, 50, -4.5f, -4.5f, -4.5f, -4.5f});
  // Padded top/left: windows at (-1,-1), (-1,2), (2,-1), (2,2).
  ASSERT_EQ(out.at("yp").shape, (Shape{1, 2, 2, 2}));
  EXPECT_FLOAT_EQ(out.at("yp").f[0], 0.0f);
  EXPECT_FLOAT_EQ(out.at("yp").f[3], 10 + 11 + 14 + 15);
  EXPECT_FLOAT_EQ(out.at("yp").f[4], -0.0f - 0.0f);
}

TEST(OnnxOps, ShapeOps) {
  GraphBuilder g;
  g.input("x", {2, 3, 4});
  g.ints("shape", {3}, {0, -1, 2});
  g.node("Reshape", {"x", "shape"}, {"r"});
  g.node("Transpose", {"x"}, {"t"}, {{"perm", std::vector<std::int64_t>{2, 0, 1}}});
  g.node("Shape", {"t"}, {"ts"});
  g.ints("split", {2}, {1, 3});
  g.node("Split", {"x", "split"}, {"s1", "s2"}, {{"axis", std::int64_t{2}}});
  g.node("Concat", {"s2", "s1"}, {"c"}, {{"axis", std::int64_t{2}}});
  g.ints("starts", {1}, {1});
  g.ints("ends", {1}, {100});
  g.ints("axes", {1}, {1});
  g.node("Slice", {"x", "starts", "ends", "axes"}, {"sl"});
  g.ints("idx", {}, {0});
  g.node("Gather", {"x", "idx"}, {"ga"}, {{"axis", std::int64_t{1}}});
  g.ints("ax0", {1}, {0});
  g.node("Unsqueeze", {"ga", "ax0"}, {"un"});
  g.node("Squeeze", {"un", "ax0"}, {"sq"});
  for (const char* o : {"r", "t", "ts", "c", "sl", "ga", "un", "sq"}) g.output(o);
  std::vector<float> xv(24);
  for (int i = 0; i < 24; ++i) xv[static_cast<std::size_t>(i)] = static_cast<float>(i);
  const OnnxGraph graph = OnnxGraph::from_bytes(g.serialize());
  const auto out = graph.run({{"x", Tensor::floats({2, 3, 4}, xv)}}, {"r", "t", "ts", "c", "sl", "ga", "un", "sq"});
  EXPECT_EQ(out.at("r").shape, (Shape{2, 6, 2}));
  EXPECT_EQ(out.at("r").f, xv);
  ASSERT_EQ(out.at("t").shape, (Shape{4, 2, 3}));
  EXPECT_EQ(out.at("t").f[1], 4.0f);   // t[0][0][1] = x[0][1][0]
  EXPECT_EQ(out.at("t").f[3], 12.0f);  // t[0][1][0] = x[1][0][0]
  EXPECT_EQ(out.at("ts").to_ints(), (std::vector<std::int64_t>{4, 2, 3}));
  ASSERT_EQ(out.at("c").shape, (Shape{2, 3, 4}));
  EXPECT_EQ(std::vector<float>(out.at("c").f.begin(), out.at("c").f.begin() + 4), (std::vector<float>{1, 2, 3, 0}));
  ASSERT_EQ(out.at("sl").shape, (Shape{2, 2, 4}));
  EXPECT_EQ(out.at("sl").f[0], 4.0f);
  ASSERT_EQ(out.at("ga").shape, (Shape{2, 4}));
  EXPECT_EQ(out.at("ga").f[4], 12.0f);
  EXPECT_EQ(out.at("un").shape, (Shape{1, 2, 4}));
  EXPECT_EQ(out.at("sq").shape, (Shape{2, 4}));
}

TEST(OnnxOps, ElementwiseFunctionsAndReductions) {
  GraphBuilder g;
  g.input("x", {2, 2});
  g.node("Erf", {"x"}, {"erf"});
  g.node("Sqrt", {"x"}, {"sqrt"});
  g.node("Tanh", {"x"}, {"tanh"});
  g.node("ReduceMean", {"x"}, {"mean"}, {{"axes", std::vector<std::int64_t>{1}}, {"keepdims", std::int64_t{0}}});
  g.floats("half", {}, {0.5f});
  g.node("Greater", {"x", "half"}, {"gt"});
  g.floats("zero", {}, {0.0f});
  g.node("Where", {"gt", "x", "zero"}, {"w"});
  g.node("Pow", {"x", "half"}, {"pow"});
  for (const char* o : {"erf", "sqrt", "tanh", "mean", "w", "pow"}) g.output(o);
  const OnnxGraph graph = OnnxGraph::from_bytes(g.serialize());
  const auto out = graph.run({{"x", Tensor::floats({2, 2}, {0.25f, 1, 4, 9})}}, {"erf", "sqrt", "tanh", "mean", "w", "pow"});
  expect_floats(out.at("erf"), {2, 2},
                {static_cast<float>(std::erf(0.25)), static_cast<float>(std::erf(1.0)), static_cast<float>(std::erf(4.0)),
                 1.0f});
  expect_floats(out.at("sqrt"), {2, 2}, {0.5f, 1, 2, 3});
  expect_floats(out.at("pow"), {2, 2}, {0.5f, 1, 2, 3});
  expect_floats(out.at("tanh"), {2, 2},
                {static_cast<float>(std::tanh(0.25)), static_cast<float>(std::tanh(1.0)),
                 static_cast<float>(std::tanh(4.0)), static_cast<float>(std::tanh(9.0))});
  expect_floats(out.at("mean"), {2}, {0.625f, 6.5f});
  expect_floats(out.at("w"), {2, 2}, {0, 1, 4, 9});
}

TEST(OnnxGraph, RunsOnlyNodesTheFetchesNeed) {
  GraphBuilder g;
  g.input("x", {1});
  g.node("Neg", {"x"}, {"a"});
  g.node("Neg", {"a"}, {"b"});
  g.node("Exp", {"x"}, {"c"});
  g.output("b");
  g.output("c");
  const OnnxGraph graph = OnnxGraph::from_bytes(g.serialize());
  EXPECT_EQ(graph.node_count(), 3u);
  EXPECT_EQ(graph.input_names(), (std::vector<std::string>{"x"}));
  RunStats stats;
  const auto out = graph.run({{"x", Tensor::floats({1}, {2})}}, {"a"}, &stats);
  EXPECT_EQ(stats.nodes_executed, 1u);
  EXPECT_EQ(out.at("a").f[0], -2.0f);
  RunStats both;
  graph.run({{"x", Tensor::floats({1}, {2})}}, {"b", "c"}, &both);
  EXPECT_EQ(both.nodes_executed, 3u);
  EXPECT_TRUE(graph.has_value("c"));
  EXPECT_FALSE(graph.has_value("nope"));
}

TEST(OnnxGraph, ReportsErrorsWithCodes) {
  GraphBuilder g;
  g.input("x", {1});
  g.node("NonMaxSuppression", {"x"}, {"y"});
  g.output("y");
  // Loading succeeds (unused branches may hold any op); the check and any
  // run that needs the node fail.
  const OnnxGraph bad = OnnxGraph::from_bytes(g.serialize());
  EXPECT_THROW(bad.run({{"x", Tensor::floats({1}, {1})}}, {"y"}), Error);
  try {
    bad.check_supported({"y"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("NonMaxSuppression"), std::string::npos);
  }
  EXPECT_THROW(OnnxGraph::from_bytes("garbage bytes"), Error);

  GraphBuilder ok;
  ok.input("x", {1});
  ok.node("Neg", {"x"}, {"y"});
  ok.output("y");
  const OnnxGraph graph = OnnxGraph::from_bytes(ok.serialize());
  try {
    graph.run({{"x", Tensor::floats({1}, {1})}}, {"missing"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
  EXPECT_THROW(graph.run({}, {"y"}), Error);
}

TEST(OnnxGraph, ReadsRawAndExternalInitializers) {
  testing::TempDir dir;
  const std::vector<float> ext{1.5f, -2.0f, 3.25f};
  std::string blob(8, '\0');
  blob.append(reinterpret_cast<const char*>(ext.data()), ext.size() * sizeof(float));
  write_file(dir / "weights.bin", blob);
  const std::vector<float> raw{10, 20, 30};
  std::string raw_bytes(reinterpret_cast<const char*>(raw.data()), raw.size() * sizeof(float));

  GraphBuilder g;
  g.input("x", {3});
  g.external_floats("e", {3}, "weights.bin", 8, 12);
  g.raw("r", {3}, testing::kOnnxFloat, raw_bytes);
  g.node("Add", {"x", "e"}, {"a"});
  g.node("Add", {"a", "r"}, {"y"});
  g.output("y");
  g.save((dir / "m.onnx").string());
  const OnnxGraph graph = OnnxGraph::load(dir / "m.onnx");
  const auto out = graph.run({{"x", Tensor::floats({3}, {0, 0, 0})}}, {"y"});
  expect_floats(out.at("y"), {3}, {11.5f, 18, 33.25f});
}

TEST(OnnxGraph, ConcurrentRunsAgree) {
  GraphBuilder g;
  g.input("x", {4, 4});
  g.node("MatMul", {"x", "x"}, {"y"});
  g.node("Softmax", {"y"}, {"z"}, {{"axis", std::int64_t{1}}});
  g.output("z");
  const OnnxGraph graph = OnnxGraph::from_bytes(g.serialize());
  std::vector<float> xv(16);
  for (int i = 0; i < 16; ++i) xv[static_cast<std::size_t>(i)] = 0.1f * static_cast<float>(i % 5);
  const auto ref = graph.run({{"x", Tensor::floats({4, 4}, xv)}}, {"z"}).at("z").f;
  std::vector<std::vector<float>> got(16);
  parallel_for(16, 4, [&](std::size_t i) { got[i] = graph.run({{"x", Tensor::floats({4, 4}, xv)}}, {"z"}).at("z").f; });
  for (const auto& v : got) EXPECT_EQ(v, ref);
}

}  // namespace
}  // namespace layerwise::backend
