#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

// Tensor inventory of a HuggingFace BertModel (embeddings, encoder layers,
// pooler), listed by name so the count is a sum over explicit shapes.
namespace oracle {

struct BertDims {
  std::size_t vocab, hidden, layers, intermediate, positions, types;
};

inline std::vector<std::pair<std::string, std::size_t>> bert_tensors(const BertDims& d) {
  std::vector<std::pair<std::string, std::size_t>> t;
  t.push_back({"embeddings.word_embeddings.weight", d.vocab * d.hidden});
  t.push_back({"embeddings.position_embeddings.weight", d.positions * d.hidden});
  t.push_back({"embeddings.token_type_embeddings.weight", d.types * d.hidden});
  t.push_back({"embeddings.LayerNorm.weight", d.hidden});
  t.push_back({"embeddings.LayerNorm.bias", d.hidden});
  for (std::size_t l = 0; l < d.layers; ++l) {
    const std::string p = "encoder.layer." + std::to_string(l) + ".";
    for (const char* m : {"attention.self.query", "attention.self.key", "attention.self.value",
                          "attention.output.dense"}) {
      t.push_back({p + m + ".weight", d.hidden * d.hidden});
      t.push_back({p + m + ".bias", d.hidden});
    }
    t.push_back({p + "attention.output.LayerNorm.weight", d.hidden});
    t.push_back({p + "attention.output.LayerNorm.bias", d.hidden});
    t.push_back({p + "intermediate.dense.weight", d.intermediate * d.hidden});
    t.push_back({p + "intermediate.dense.bias", d.intermediate});
    t.push_back({p + "output.dense.weight", d.hidden * d.intermediate});
    t.push_back({p + "output.dense.bias", d.hidden});
    t.push_back({p + "output.LayerNorm.weight", d.hidden});
    t.push_back({p + "output.LayerNorm.bias", d.hidden});
  }
  t.push_back({"pooler.dense.weight", d.hidden * d.hidden});
  t.push_back({"pooler.dense.bias", d.hidden});
  return t;
}

inline std::size_t bert_parameter_count(const BertDims& d) {
  std::size_t n = 0;
  for (const auto& [name, size] : bert_tensors(d)) n += size;
  return n;
}

// bert-base-multilingual-cased config.json.
inline constexpr BertDims kMultilingualBase{119547, 768, 12, 3072, 512, 2};

}  // namespace oracle
