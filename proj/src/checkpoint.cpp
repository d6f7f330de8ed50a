#include "curricula/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace curricula {

namespace {

using nlohmann::json;

void write_le_doubles(std::ofstream& out, const std::vector<double>& values) {
  for (double v : values) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    if constexpr (std::endian::native == std::endian::big) {
      uint64_t swapped = 0;
      for (int i = 0; i < 8; ++i) swapped |= ((bits >> (8 * i)) & 0xffULL) << (8 * (7 - i));
      bits = swapped;
    }
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
}

std::vector<double> read_le_doubles(std::ifstream& in, size_t count) {
  std::vector<double> values(count);
  for (size_t i = 0; i < count; ++i) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw std::runtime_error("checkpoint: truncated params.bin");
    uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) {
      uint64_t swapped = 0;
      for (int b = 0; b < 8; ++b) swapped |= ((bits >> (8 * b)) & 0xffULL) << (8 * (7 - b));
      bits = swapped;
    }
    std::memcpy(&values[i], &bits, 8);
  }
  return values;
}

json store_shapes(const ParamStore& store, const std::string& prefix, long& offset,
                  std::vector<const Matrix*>& blobs) {
  json tensors = json::array();
  for (int i = 0; i < store.count(); ++i) {
    const Matrix& m = store.value(i);
    tensors.push_back({{"name", prefix + "/" + store.name(i)},
                       {"rows", m.rows},
                       {"cols", m.cols},
                       {"offset", offset}});
    offset += static_cast<long>(m.size());
    blobs.push_back(&m);
  }
  return tensors;
}

}  // namespace

void save_checkpoint(const std::string& dir, const StudentPolicy& policy,
                     const ImitationModel* imitation, const Teacher* teacher, long round,
                     uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  long offset = 0;
  std::vector<const Matrix*> blobs;
  json tensors = json::array();
  for (const auto& t : store_shapes(policy.params(), "student", offset, blobs))
    tensors.push_back(t);
  if (imitation)
    for (const auto& t : store_shapes(imitation->params(), "imitation", offset, blobs))
      tensors.push_back(t);

  json manifest;
  manifest["format_version"] = 1;
  manifest["round"] = round;
  manifest["seed"] = seed;
  manifest["blob"] = "params.bin";
  manifest["tensors"] = tensors;
  manifest["student"] = {{"obs_dim", policy.config().obs_dim},
                         {"d_m", policy.config().d_m},
                         {"d_skill", policy.config().d_skill},
                         {"heads", policy.config().heads},
                         {"interval", policy.config().interval},
                         {"hidden", policy.config().hidden},
                         {"n_actions", policy.config().n_actions},
                         {"skill_mode", policy.config().skill_mode == SkillMode::kDiscrete
                                            ? "discrete"
                                            : "continuous"}};
  if (imitation)
    manifest["imitation"] = {{"obs_dim", imitation->config().obs_dim},
                             {"hidden", imitation->config().hidden},
                             {"n_actions", imitation->config().n_actions}};

  {
    std::ofstream blob(fs::path(dir) / "params.bin", std::ios::binary);
    if (!blob) throw std::runtime_error("checkpoint: cannot write params.bin");
    for (const Matrix* m : blobs) write_le_doubles(blob, m->data);
  }
  if (teacher) {
    std::ofstream t(fs::path(dir) / "teacher.json");
    t << teacher_to_json(*teacher).dump(2) << '\n';
    manifest["teacher"] = "teacher.json";
  }
  std::ofstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("checkpoint: cannot write manifest.json");
  mf << manifest.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("checkpoint: cannot open " + dir + "/manifest.json");
  LoadedCheckpoint ckpt;
  mf >> ckpt.manifest;
  ckpt.round = ckpt.manifest.value("round", 0L);
  ckpt.seed = ckpt.manifest.value("seed", 0ULL);

  std::ifstream blob(fs::path(dir) / ckpt.manifest.value("blob", std::string("params.bin")),
                     std::ios::binary);
  if (!blob) throw std::runtime_error("checkpoint: cannot open params blob");
  for (const auto& t : ckpt.manifest.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    Matrix m(t.at("rows").get<int>(), t.at("cols").get<int>());
    blob.seekg(t.at("offset").get<long>() * 8);
    m.data = read_le_doubles(blob, m.size());
    ckpt.tensors.emplace(name, std::move(m));
  }
  if (ckpt.manifest.contains("teacher")) {
    std::ifstream tf(fs::path(dir) / ckpt.manifest.at("teacher").get<std::string>());
    if (tf) tf >> ckpt.teacher_state;
  }
  return ckpt;
}

void apply_tensors(const LoadedCheckpoint& ckpt, const std::string& prefix, ParamStore& store) {
  for (int i = 0; i < store.count(); ++i) {
    const std::string key = prefix + "/" + store.name(i);
    const auto it = ckpt.tensors.find(key);
    if (it == ckpt.tensors.end())
      throw std::runtime_error("checkpoint: missing tensor " + key);
    if (!it->second.same_shape(store.value(i)))
      throw std::runtime_error("checkpoint: shape mismatch for " + key);
    store.value(i) = it->second;
  }
}

nlohmann::json teacher_to_json(const Teacher& teacher) {
  json state;
  state["alpha"] = teacher.alpha();
  json instances = json::array();
  const auto& centers = teacher.tree().centers();
  for (const auto& c : centers) {
    const Exp3Instance& inst = teacher.instance(c.id);
    instances.push_back({{"cluster_id", c.id},
                         {"generation", c.generation},
                         {"weights", inst.weights},
                         {"alpha", inst.alpha},
                         {"arm_count", inst.arm_count},
                         {"update_rule", inst.update_rule == UpdateRule::kPaperLiteral
                                             ? "paper_literal"
                                             : "importance_weighted"}});
  }
  state["instances"] = instances;

  json leaves = json::array();
  for (const auto& leaf : teacher.tree().leaves())
    leaves.push_back(
        {{"count", leaf.count}, {"linear_sum", leaf.linear_sum}, {"squared_sum", leaf.squared_sum}});
  state["leaves"] = leaves;

  json centers_json = json::array();
  for (const auto& c : centers)
    centers_json.push_back({{"id", c.id}, {"generation", c.generation}, {"centroid", c.centroid}});
  state["centers"] = centers_json;
  state["insert_count"] = teacher.tree().insert_count();

  const auto& norm = teacher.return_normalizer();
  state["return_normalizer"] = {{"min", norm.min}, {"max", norm.max}, {"count", norm.count}};
  const auto& std_ = teacher.context_standardizer();
  state["context_standardizer"] = {
      {"mean", std_.mean()}, {"m2", std_.m2()}, {"count", std_.count()}};

  json buffer = json::array();
  for (const auto& ctx : teacher.context_buffer()) buffer.push_back(ctx);
  state["context_buffer"] = buffer;
  return state;
}

void restore_teacher(const nlohmann::json& state, Teacher& teacher) {
  std::vector<ClusteringFeature> leaves;
  for (const auto& l : state.at("leaves")) {
    ClusteringFeature cf;
    cf.count = l.at("count").get<long>();
    cf.linear_sum = l.at("linear_sum").get<std::vector<double>>();
    cf.squared_sum = l.at("squared_sum").get<double>();
    leaves.push_back(std::move(cf));
  }
  std::vector<CFTree::Center> centers;
  for (const auto& c : state.at("centers")) {
    CFTree::Center center;
    center.id = c.at("id").get<int>();
    center.generation = c.at("generation").get<long>();
    center.centroid = c.at("centroid").get<std::vector<double>>();
    centers.push_back(std::move(center));
  }
  teacher.mutable_tree().restore(std::move(leaves), std::move(centers),
                                 state.at("insert_count").get<long>());

  std::map<int, Exp3Instance> instances;
  std::map<int, long> generations;
  for (const auto& i : state.at("instances")) {
    Exp3Instance inst;
    inst.weights = i.at("weights").get<std::vector<double>>();
    inst.alpha = i.at("alpha").get<double>();
    inst.arm_count = i.at("arm_count").get<int>();
    inst.update_rule = i.at("update_rule").get<std::string>() == "paper_literal"
                           ? UpdateRule::kPaperLiteral
                           : UpdateRule::kImportanceWeighted;
    instances.emplace(i.at("cluster_id").get<int>(), std::move(inst));
    generations[i.at("cluster_id").get<int>()] = i.at("generation").get<long>();
  }
  teacher.restore_instances(std::move(instances), std::move(generations));

  const auto& rn = state.at("return_normalizer");
  teacher.restore_normalizer(
      {rn.at("min").get<double>(), rn.at("max").get<double>(), rn.at("count").get<long>()});
  const auto& cs = state.at("context_standardizer");
  teacher.mutable_standardizer().restore(cs.at("mean").get<std::vector<double>>(),
                                         cs.at("m2").get<std::vector<double>>(),
                                         cs.at("count").get<long>());
  teacher.mutable_buffer().clear();
  for (const auto& ctx : state.at("context_buffer"))
    teacher.mutable_buffer().push_back(ctx.get<std::vector<double>>());
}

}  // namespace curricula
