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

#include "layerwise/backend/onnx_graph.hpp"

#include <google/protobuf/io/coded_stream.h>

#include <algorithm>
#include <bit>
#include <climits>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "backend/onnx_ops.hpp"
#include "layerwise/common.hpp"
#include "onnx/onnx.pb.h"

namespace layerwise::backend {

using onnx_detail::Attribute;
using onnx_detail::Node;
using onnx_detail::OpFn;

namespace {

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1fu;
  std::uint32_t man = h & 0x3ffu;
  std::uint32_t bits;
  if (exp == 0) {
    if (man == 0) {
      bits = sign;
    } else {
      exp = 127 - 15 + 1;
      while ((man & 0x400u) == 0) {
        man <<= 1;
        --exp;
      }
      bits = sign | (exp << 23) | ((man & 0x3ffu) << 13);
    }
  } else if (exp == 0x1f) {
    bits = sign | 0x7f800000u | (man << 13);
  } else {
    bits = sign | ((exp + 127 - 15) << 23) | (man << 13);
  }
  return std::bit_cast<float>(bits);
}

float bfloat_to_float(std::uint16_t h) { return std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16); }

template <class T>
std::vector<T> unpack_raw(const std::string& raw, std::size_t count, const std::string& name) {
  if (raw.size() != count * sizeof(T)) {
    fail(ErrorCode::kParse, "tensor '" + name + "' has " + std::to_string(raw.size()) + " raw bytes, expected " +
                                std::to_string(count * sizeof(T)));
  }
  std::vector<T> out(count);
  if (count) std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

std::string external_bytes(const onnx::TensorProto& tp, const std::filesystem::path& base_dir) {
  std::string location;
  std::int64_t offset = 0, length = -1;
  for (const auto& kv : tp.external_data()) {
    if (kv.key() == "location") location = kv.value();
    if (kv.key() == "offset") offset = std::stoll(kv.value());
    if (kv.key() == "length") length = std::stoll(kv.value());
  }
  if (location.empty()) fail(ErrorCode::kParse, "tensor '" + tp.name() + "' has external data without a location");
  const auto path = base_dir / location;
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "external data file not found: " + path.string());
  in.seekg(0, std::ios::end);
  const std::int64_t size = in.tellg();
  if (length < 0) length = size - offset;
  if (offset < 0 || offset + length > size) {
    fail(ErrorCode::kCorrupt, "external data range out of bounds in " + path.string());
  }
  std::string bytes(static_cast<std::size_t>(length), '\0');
  in.seekg(offset);
  in.read(bytes.data(), length);
  return bytes;
}

Tensor convert_tensor(const onnx::TensorProto& tp, const std::filesystem::path& base_dir) {
  Shape shape(tp.dims().begin(), tp.dims().end());
  const auto n = static_cast<std::size_t>(numel(shape));
  const std::string& name = tp.name();
  std::string raw_storage;
  const std::string* raw = nullptr;
  if (tp.data_location() == onnx::TensorProto::EXTERNAL) {
    raw_storage = external_bytes(tp, base_dir);
    raw = &raw_storage;
  } else if (tp.has_raw_data()) {
    raw = &tp.raw_data();
  }
  auto int32_field = [&]() {
    std::vector<std::int64_t> v(tp.int32_data().begin(), tp.int32_data().end());
    if (v.size() != n) fail(ErrorCode::kParse, "tensor '" + name + "' value count mismatch");
    return v;
  };
  auto widen = [](const auto& src) { return std::vector<std::int64_t>(src.begin(), src.end()); };
  switch (tp.data_type()) {
    case onnx::TensorProto::FLOAT: {
      if (raw) return Tensor::floats(shape, unpack_raw<float>(*raw, n, name));
      return Tensor::floats(shape, std::vector<float>(tp.float_data().begin(), tp.float_data().end()));
    }
    case onnx::TensorProto::DOUBLE: {
      std::vector<double> d = raw ? unpack_raw<double>(*raw, n, name)
                                  : std::vector<double>(tp.double_data().begin(), tp.double_data().end());
      return Tensor::floats(shape, std::vector<float>(d.begin(), d.end()));
    }
    case onnx::TensorProto::FLOAT16:
    case onnx::TensorProto::BFLOAT16: {
      std::vector<std::uint16_t> h;
      if (raw) {
        h = unpack_raw<std::uint16_t>(*raw, n, name);
      } else {
        for (auto v : int32_field()) h.push_back(static_cast<std::uint16_t>(v));
      }
      std::vector<float> f(h.size());
      const bool bf = tp.data_type() == onnx::TensorProto::BFLOAT16;
      for (std::size_t k = 0; k < h.size(); ++k) f[k] = bf ? bfloat_to_float(h[k]) : half_to_float(h[k]);
      return Tensor::floats(shape, f);
    }
    case onnx::TensorProto::INT64:
      if (raw) return Tensor::ints(shape, unpack_raw<std::int64_t>(*raw, n, name));
      return Tensor::ints(shape, widen(tp.int64_data()));
    case onnx::TensorProto::INT32:
      if (raw) return Tensor::ints(shape, widen(unpack_raw<std::int32_t>(*raw, n, name)));
      return Tensor::ints(shape, int32_field());
    case onnx::TensorProto::INT16:
      if (raw) return Tensor::ints(shape, widen(unpack_raw<std::int16_t>(*raw, n, name)));
      return Tensor::ints(shape, int32_field());
    case onnx::TensorProto::UINT16:
      if (raw) return Tensor::ints(shape, widen(unpack_raw<std::uint16_t>(*raw, n, name)));
      return Tensor::ints(shape, int32_field());
    case onnx::TensorProto::INT8:
      if (raw) return Tensor::ints(shape, widen(unpack_raw<std::int8_t>(*raw, n, name)));
      return Tensor::ints(shape, int32_field());
    case onnx::TensorProto::UINT8:
      if (raw) return Tensor::ints(shape, widen(unpack_raw<std::uint8_t>(*raw, n, name)));
      return Tensor::ints(shape, int32_field());
    case onnx::TensorProto::BOOL:
      if (raw) return Tensor::bools(shape, widen(unpack_raw<std::uint8_t>(*raw, n, name)));
      return Tensor::bools(shape, int32_field());
    case onnx::TensorProto::UINT32:
      if (raw) return Tensor::ints(shape, widen(unpack_raw<std::uint32_t>(*raw, n, name)));
      return Tensor::ints(shape, widen(tp.uint64_data()));
    case onnx::TensorProto::UINT64:
      if (raw) return Tensor::ints(shape, widen(unpack_raw<std::uint64_t>(*raw, n, name)));
      return Tensor::ints(shape, widen(tp.uint64_data()));
    default:
      fail(ErrorCode::kParse, "tensor '" + name + "' has unsupported data type " + std::to_string(tp.data_type()));
  }
}

Attribute convert_attribute(const onnx::AttributeProto& ap, const std::filesystem::path& base_dir) {
  Attribute a;
  switch (ap.type()) {
    case onnx::AttributeProto::FLOAT:
      a.kind = Attribute::Kind::kFloat;
      a.f = ap.f();
      break;
    case onnx::AttributeProto::INT:
      a.kind = Attribute::Kind::kInt;
      a.i = ap.i();
      break;
    case onnx::AttributeProto::STRING:
      a.kind = Attribute::Kind::kString;
      a.s = ap.s();
      break;
    case onnx::AttributeProto::TENSOR:
      a.kind = Attribute::Kind::kTensor;
      a.t = convert_tensor(ap.t(), base_dir);
      break;
    case onnx::AttributeProto::FLOATS:
      a.kind = Attribute::Kind::kFloats;
      a.floats.assign(ap.floats().begin(), ap.floats().end());
      break;
    case onnx::AttributeProto::INTS:
      a.kind = Attribute::Kind::kInts;
      a.ints.assign(ap.ints().begin(), ap.ints().end());
      break;
    case onnx::AttributeProto::STRINGS:
      a.kind = Attribute::Kind::kStrings;
      a.strings.assign(ap.strings().begin(), ap.strings().end());
      break;
    default:
      a.kind = Attribute::Kind::kOther;
      break;
  }
  return a;
}

}  // namespace

struct OnnxGraph::Impl {
  std::vector<Node> nodes;
  std::vector<const OpFn*> fns;
  TensorMap initializers;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::unordered_map<std::string, std::size_t> producer;
  std::int64_t opset = 0;
};

OnnxGraph::OnnxGraph(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
OnnxGraph::OnnxGraph(OnnxGraph&&) noexcept = default;
OnnxGraph& OnnxGraph::operator=(OnnxGraph&&) noexcept = default;
OnnxGraph::~OnnxGraph() = default;

OnnxGraph OnnxGraph::load(const std::filesystem::path& path) {
  return from_bytes(read_file(path), path.parent_path());
}

OnnxGraph OnnxGraph::from_bytes(std::string_view bytes, const std::filesystem::path& base_dir) {
  if (bytes.size() > static_cast<std::size_t>(INT_MAX)) fail(ErrorCode::kParse, "model file exceeds 2 GiB");
  onnx::ModelProto model;
  google::protobuf::io::CodedInputStream stream(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                                static_cast<int>(bytes.size()));
  stream.SetTotalBytesLimit(INT_MAX);
  if (!model.ParseFromCodedStream(&stream) || !stream.ConsumedEntireMessage()) {
    fail(ErrorCode::kParse, "not a valid ONNX model");
  }
  auto impl = std::make_unique<Impl>();
  for (const auto& os : model.opset_import()) {
    if (os.domain().empty() || os.domain() == "ai.onnx") impl->opset = os.version();
  }
  if (impl->opset == 0) fail(ErrorCode::kParse, "model has no default-domain opset import");
  const onnx::GraphProto& g = model.graph();
  for (const auto& init : g.initializer()) impl->initializers[init.name()] = convert_tensor(init, base_dir);
  for (const auto& vi : g.input()) {
    if (!impl->initializers.count(vi.name())) impl->inputs.push_back(vi.name());
  }
  for (const auto& vi : g.output()) impl->outputs.push_back(vi.name());
  impl->nodes.reserve(static_cast<std::size_t>(g.node_size()));
  for (const auto& np : g.node()) {
    Node node;
    node.name = np.name();
    node.op_type = np.op_type();
    node.domain = np.domain();
    node.inputs.assign(np.input().begin(), np.input().end());
    node.outputs.assign(np.output().begin(), np.output().end());
    for (const auto& ap : np.attribute()) node.attributes[ap.name()] = convert_attribute(ap, base_dir);
    const bool default_domain = node.domain.empty() || node.domain == "ai.onnx";
    impl->fns.push_back(default_domain ? onnx_detail::find_op(node.op_type) : nullptr);
    const std::size_t index = impl->nodes.size();
    for (const auto& out : node.outputs) {
      if (out.empty()) continue;
      if (impl->producer.count(out) || impl->initializers.count(out)) {
        fail(ErrorCode::kParse, "value '" + out + "' is produced more than once");
      }
      impl->producer[out] = index;
    }
    impl->nodes.push_back(std::move(node));
  }
  // Graph order must be topological; check rather than sort.
  std::unordered_set<std::string> known(impl->inputs.begin(), impl->inputs.end());
  for (const auto& [name, t] : impl->initializers) known.insert(name);
  for (const Node& node : impl->nodes) {
    for (const auto& in : node.inputs) {
      if (!in.empty() && !known.count(in)) {
        fail(ErrorCode::kParse, "node '" + node.name + "' reads '" + in + "' before it is produced");
      }
    }
    for (const auto& out : node.outputs) known.insert(out);
  }
  return OnnxGraph(std::move(impl));
}

std::vector<std::string> OnnxGraph::input_names() const { return impl_->inputs; }
std::vector<std::string> OnnxGraph::output_names() const { return impl_->outputs; }

bool OnnxGraph::has_value(const std::string& name) const {
  return impl_->producer.count(name) || impl_->initializers.count(name) ||
         std::find(impl_->inputs.begin(), impl_->inputs.end(), name) != impl_->inputs.end();
}

std::size_t OnnxGraph::node_count() const { return impl_->nodes.size(); }
std::int64_t OnnxGraph::opset_version() const { return impl_->opset; }

void OnnxGraph::check_supported(const std::vector<std::string>& fetches) const {
  const Impl& g = *impl_;
  std::vector<std::string> stack;
  std::unordered_set<std::string> seen;
  for (const auto& f : fetches) {
    if (!has_value(f)) fail(ErrorCode::kNotFound, "value '" + f + "' is not in the graph");
    stack.push_back(f);
  }
  while (!stack.empty()) {
    const std::string name = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(name).second) continue;
    auto it = g.producer.find(name);
    if (it == g.producer.end()) continue;
    const Node& node = g.nodes[it->second];
    if (!g.fns[it->second]) {
      fail(ErrorCode::kParse, "unsupported operator " + (node.domain.empty() ? "" : node.domain + ".") + node.op_type);
    }
    for (const auto& in : node.inputs) {
      if (!in.empty()) stack.push_back(in);
    }
  }
}

TensorMap OnnxGraph::run(const TensorMap& feeds, const std::vector<std::string>& fetches, RunStats* stats) const {
  const Impl& g = *impl_;
  std::vector<bool> needed(g.nodes.size(), false);
  std::vector<std::string> stack;
  std::unordered_set<std::string> seen;
  for (const auto& f : fetches) {
    if (!has_value(f)) fail(ErrorCode::kNotFound, "value '" + f + "' is not in the graph");
    stack.push_back(f);
  }
  while (!stack.empty()) {
    const std::string name = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(name).second) continue;
    if (feeds.count(name) || g.initializers.count(name)) continue;
    auto it = g.producer.find(name);
    if (it == g.producer.end()) fail(ErrorCode::kInvalidArgument, "graph input '" + name + "' was not fed");
    if (needed[it->second]) continue;
    needed[it->second] = true;
    for (const auto& in : g.nodes[it->second].inputs) {
      if (!in.empty()) stack.push_back(in);
    }
  }

  // Last reader of each intermediate, so it can be dropped early.
  std::unordered_map<std::string, std::size_t> last_use;
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    if (!needed[k]) continue;
    for (const auto& in : g.nodes[k].inputs) last_use[in] = k;
  }
  const std::unordered_set<std::string> keep(fetches.begin(), fetches.end());

  TensorMap live;
  auto lookup = [&](const std::string& name) -> const Tensor* {
    if (auto it = live.find(name); it != live.end()) return &it->second;
    if (auto it = feeds.find(name); it != feeds.end()) return &it->second;
    if (auto it = g.initializers.find(name); it != g.initializers.end()) return &it->second;
    return nullptr;
  };
  std::size_t executed = 0;
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    if (!needed[k]) continue;
    const Node& node = g.nodes[k];
    if (!g.fns[k]) {
      fail(ErrorCode::kParse, "unsupported operator " + (node.domain.empty() ? "" : node.domain + ".") + node.op_type);
    }
    onnx_detail::Inputs args;
    args.reserve(node.inputs.size());
    for (const auto& in : node.inputs) args.push_back(in.empty() ? nullptr : lookup(in));
    std::vector<Tensor> outs;
    try {
      outs = (*g.fns[k])(onnx_detail::OpContext{node, g.opset}, args);
    } catch (const Error& e) {
      fail(e.code(), "node '" + node.name + "': " + e.what());
    }
    if (outs.size() < node.outputs.size()) {
      // Trailing optional outputs an op does not produce must be unnamed.
      for (std::size_t j = outs.size(); j < node.outputs.size(); ++j) {
        if (!node.outputs[j].empty() && last_use.count(node.outputs[j])) {
          fail(ErrorCode::kParse, "node '" + node.name + "' does not produce '" + node.outputs[j] + "'");
        }
      }
    }
    for (std::size_t j = 0; j < node.outputs.size() && j < outs.size(); ++j) {
      if (!node.outputs[j].empty()) live[node.outputs[j]] = std::move(outs[j]);
    }
    ++executed;
    for (const auto& in : node.inputs) {
      auto it = last_use.find(in);
      if (it != last_use.end() && it->second == k && !keep.count(in)) live.erase(in);
    }
  }
  if (stats) stats->nodes_executed = executed;

  TensorMap result;
  for (const auto& f : fetches) {
    const Tensor* t = lookup(f);
    if (!t) fail(ErrorCode::kInvalidArgument, "value '" + f + "' was not computed");
    result[f] = *t;
  }
  return result;
}

}  // namespace layerwise::backend
