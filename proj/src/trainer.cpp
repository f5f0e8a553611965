#include "belieflab/trainer.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace belieflab {

namespace {

constexpr char kRunMagic[4] = {'B', 'L', 'R', 'N'};
constexpr std::uint32_t kRunVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw nn::CheckpointError("checkpoint truncated");
  return v;
}

std::vector<SubTrajectoryPtr> share(std::vector<SubTrajectory> subs) {
  std::vector<SubTrajectoryPtr> out;
  for (auto& s : subs) out.push_back(std::make_shared<const SubTrajectory>(std::move(s)));
  return out;
}

CollectOptions collect_options(const TrainConfig& cfg) {
  CollectOptions o;
  o.episode_length = cfg.episode_length;
  o.slice_length = cfg.slice_length;
  o.observation = cfg.observation();
  return o;
}

nlohmann::json optional_number(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

ModelSizes model_sizes(const TrainConfig& cfg) {
  ModelSizes s = cfg.sizes;
  s.observation = observation_size(cfg.observation());
  return s;
}

// ---- ConcurrentCollector ----------------------------------------------------

ConcurrentCollector::ConcurrentCollector(const GridMap& map, const TrainConfig& cfg, ReplayBuffer& buffer,
                                         int workers, std::uint64_t first_episode)
    : map_(map), cfg_(cfg), buffer_(buffer), first_episode_(first_episode) {
  if (workers < 1) throw std::invalid_argument("collector needs at least one worker");
  for (int w = 0; w < workers; ++w) threads_.emplace_back([this, w] { run(w); });
}

ConcurrentCollector::~ConcurrentCollector() { stop(); }

void ConcurrentCollector::publish(const ParamSet& params, std::int64_t updates_done) {
  auto snap = std::make_shared<const ParamSet>(params);
  {
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(snap);
    updates_done_ = updates_done;
  }
  cv_.notify_all();
}

void ConcurrentCollector::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
  threads_.clear();
}

void ConcurrentCollector::run(int /*worker*/) {
  Representation local(cfg_.algo, model_sizes(cfg_), 0);
  const auto opts = collect_options(cfg_);
  for (;;) {
    std::shared_ptr<const ParamSet> snap;
    std::uint64_t id = 0;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] {
        const auto allowed = static_cast<std::uint64_t>(updates_done_ / cfg_.updates_per_episode) + 1;
        return stopping_ || (snapshot_ && claimed_ < allowed);
      });
      if (stopping_) return;
      id = first_episode_ + claimed_++;
      snap = snapshot_;
    }
    local.set_params(*snap);
    Rng env_rng = derive_rng(cfg_.seed, 1000 + 2 * id);
    RandomRepeatPolicy policy(derive_rng(cfg_.seed, 1001 + 2 * id));
    for (auto& sub : share(collect_episode(map_, local, policy, env_rng, opts, id))) buffer_.push(std::move(sub));
    ++collected_;
  }
}

// ---- Trainer -----------------------------------------------------------------

Trainer::Trainer(TrainConfig cfg)
    : cfg_((validate(cfg), std::move(cfg))),
      map_(load_map(cfg_.env)),
      net_(cfg_.algo, model_sizes(cfg_), derive_rng(cfg_.seed, 1)()),
      probes_(map_, model_sizes(cfg_), derive_rng(cfg_.seed, 2)()),
      buffer_(cfg_.capacity),
      env_rng_(derive_rng(cfg_.seed, 3)),
      batch_rng_(derive_rng(cfg_.seed, 5)),
      term_rng_(derive_rng(cfg_.seed, 6)),
      policy_(derive_rng(cfg_.seed, 7)) {
  adam_.lr = cfg_.lr;
  probe_adam_.lr = cfg_.probe_lr;
}

Trainer::~Trainer() {
  if (collector_) collector_->stop();
}

void Trainer::collect_one() {
  for (auto& sub : share(collect_episode(map_, net_, policy_, env_rng_, collect_options(cfg_), episodes_))) {
    buffer_.push(std::move(sub));
  }
  ++episodes_;
}

void Trainer::collect(int episodes) {
  for (int i = 0; i < episodes; ++i) collect_one();
}

void Trainer::warm_up() {
  while (episodes_ < static_cast<std::uint64_t>(cfg_.warmup_episodes)) collect_one();
}

UpdateStats Trainer::update() {
  if (!collector_ && updates_ % cfg_.updates_per_episode == 0) collect_one();
  const auto items = buffer_.sample(static_cast<std::size_t>(cfg_.batch), batch_rng_);
  const Batch batch = make_batch(items);
  ObjectiveResult res;
  if (cfg_.algo == Algo::FramePrediction) {
    res = fp_update(net_, batch, adam_);
  } else {
    CpcOptions opts;
    opts.future = cfg_.future;
    opts.use_actions = cfg_.algo == Algo::CpcAction;
    opts.permissive_negatives = cfg_.permissive_negatives;
    res = cpc_action_update(net_, batch, opts, adam_, term_rng_);
  }
  UpdateStats stats;
  stats.loss = res.loss;
  stats.probe = probes_.update(res.beliefs, make_probe_targets(map_, items), probe_adam_);
  ++updates_;
  if (collector_) collector_->publish(net_.params(), updates_);
  return stats;
}

EvalReport Trainer::evaluate() {
  if (!eval_set_) {
    EvalSetOptions o;
    o.episodes = cfg_.eval_episodes;
    o.episode_length = cfg_.eval_episode_length;
    o.seed = cfg_.effective_eval_seed();
    o.observation = cfg_.observation();
    eval_set_ = make_eval_set(map_, o);
  }
  return belieflab::evaluate(map_, net_, probes_, *eval_set_, map_.name() == "two_hallways");
}

nlohmann::json Trainer::metrics_record(const EvalReport& r, std::optional<double> train_loss) const {
  nlohmann::json j;
  j["update_step"] = updates_;
  j["algo"] = algo_name(cfg_.algo);
  j["F"] = cfg_.algo == Algo::FramePrediction ? nlohmann::json(nullptr) : nlohmann::json(cfg_.future);
  j["env"] = cfg_.env;
  j["ce_pose"] = r.ce_pose;
  j["bce_past"] = r.bce_past;
  j["bce_objects"] = optional_number(r.bce_objects);
  j["tv_oracle_mean"] = r.tv_oracle_mean;
  j["support_size_mean"] = r.support_size_mean;
  j["seed"] = cfg_.seed;
  j["kl_oracle_mean"] = r.kl_oracle_mean;
  j["oracle_ce"] = r.oracle_ce;
  j["post_collapse_accuracy"] = r.post_collapse_accuracy;
  j["post_collapse_steps"] = r.post_collapse_steps;
  j["train_loss"] = optional_number(train_loss);
  if (r.region) {
    j["region_before_true"] = r.region->before_true;
    j["region_before_other"] = r.region->before_other;
    j["region_after_true"] = r.region->after_true;
  }
  return j;
}

EvalReport Trainer::train(std::ostream* metrics, const std::string& run_dir, const Progress& progress) {
  warm_up();
  if (cfg_.collectors > 0 && !collector_) {
    collector_ = std::make_unique<ConcurrentCollector>(map_, cfg_, buffer_, cfg_.collectors, episodes_);
    collector_->publish(net_.params(), updates_);
  }
  auto emit = [&](const EvalReport& r, std::optional<double> loss) {
    history_.emplace_back(updates_, r);
    const auto rec = metrics_record(r, loss);
    if (metrics) *metrics << rec.dump() << '\n' << std::flush;
    if (progress) progress(rec);
  };
  EvalReport report = evaluate();
  emit(report, std::nullopt);
  double loss_sum = 0.0;
  int loss_count = 0;
  while (updates_ < cfg_.updates) {
    loss_sum += update().loss;
    ++loss_count;
    if (updates_ % cfg_.eval_interval == 0 || updates_ == cfg_.updates) {
      report = evaluate();
      emit(report, loss_sum / loss_count);
      loss_sum = 0.0;
      loss_count = 0;
    }
    if (!run_dir.empty() && cfg_.checkpoint_interval > 0 && updates_ % cfg_.checkpoint_interval == 0) {
      save_checkpoint((std::filesystem::path(run_dir) / ("checkpoint_" + std::to_string(updates_) + ".bin")).string());
    }
  }
  if (collector_) {
    collector_->stop();
    episodes_ += collector_->episodes_collected();
    collector_.reset();
  }
  if (!run_dir.empty()) save_checkpoint((std::filesystem::path(run_dir) / "checkpoint.bin").string());
  return report;
}

void Trainer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nn::CheckpointError("cannot open '" + path + "' for writing");
  out.write(kRunMagic, sizeof kRunMagic);
  put<std::uint32_t>(out, kRunVersion);
  const std::string text = to_text(cfg_);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  nn::save_bundle({{"representation", &net_.params()},
                   {"probe.pose", &probes_.pose_params()},
                   {"probe.past", &probes_.past_params()},
                   {"probe.objects", &probes_.object_params()}},
                  out);
}

RunCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw nn::CheckpointError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kRunMagic, sizeof magic) != 0) {
    throw nn::CheckpointError("'" + path + "' is not a run checkpoint");
  }
  if (take<std::uint32_t>(in) != kRunVersion) throw nn::CheckpointError("unsupported run checkpoint version");
  const auto len = take<std::uint32_t>(in);
  if (len > (1u << 20)) throw nn::CheckpointError("corrupt run checkpoint header");
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw nn::CheckpointError("checkpoint truncated");
  RunCheckpoint ck;
  ck.config = parse_config(text, TrainConfig{});
  auto sets = nn::load_bundle(in);
  for (const char* key : {"representation", "probe.pose", "probe.past", "probe.objects"}) {
    if (!sets.contains(key)) throw nn::CheckpointError(std::string("checkpoint lacks '") + key + "'");
  }
  ck.representation = std::move(sets["representation"]);
  ck.pose = std::move(sets["probe.pose"]);
  ck.past = std::move(sets["probe.past"]);
  ck.objects = std::move(sets["probe.objects"]);
  return ck;
}

void restore(const RunCheckpoint& ck, Representation& net, ProbeHeads& probes) {
  net.set_params(ck.representation);
  probes.set_params(ck.pose, ck.past, ck.objects);
}

}  // namespace belieflab
