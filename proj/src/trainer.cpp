#include "cctsp/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace cctsp {

BatchStats reinforce_step(PtrNetModel& actor, CriticModel& critic,
                          const std::vector<std::vector<Point>>& batch,
                          nn::Adam& actor_opt, nn::Adam& critic_opt,
                          double grad_clip, RngStream& rng) {
    const int B = int(batch.size());
    if (B < 1) throw Error("reinforce_step: empty batch");

    BatchStats stats;
    for (const auto& coords : batch) {
        EncodeCache enc = encode(actor, coords);
        DecodeCache dec;
        DecodeResult sampled = decode(actor, enc, DecodeMode::Sample, rng, &dec);
        const double length = tour_length(coords, sampled.permutation);

        CriticCache crit_cache;
        const double baseline = critic_forward(critic, coords, &crit_cache);
        const double advantage = length - baseline;

        // actor surrogate: (1/B) sum advantage_i * log p(sigma_i); the
        // baseline is a constant here, no gradient into the critic.
        actor_backward(actor, coords, enc, dec, sampled, advantage / B);

        // critic MSE: (1/B) sum (b_i - L_i)^2
        critic_backward(critic, coords, crit_cache, 2.0 * (baseline - length) / B);

        stats.mean_length += length / B;
        stats.critic_loss += advantage * advantage / B;
        stats.mean_advantage += advantage / B;
    }
    if (!std::isfinite(stats.mean_length) || !std::isfinite(stats.critic_loss)) {
        std::ostringstream os;
        os << "non-finite loss in reinforce_step; grad norms actor="
           << nn::global_grad_norm(actor.params()) << " critic="
           << nn::global_grad_norm(critic.params());
        throw Error(os.str());
    }

    auto actor_params = actor.params();
    auto critic_params = critic.params();
    if (grad_clip > 0.0) {
        nn::clip_global_norm(actor_params, grad_clip);
        nn::clip_global_norm(critic_params, grad_clip);
    }
    actor_opt.step(actor_params);
    critic_opt.step(critic_params);
    return stats;
}

double eval_greedy_mean(const PtrNetModel& actor,
                        const std::vector<std::vector<Point>>& eval_set) {
    RngStream unused(0);
    double total = 0.0;
    for (const auto& coords : eval_set) {
        EncodeCache enc = encode(actor, coords);
        DecodeResult r = decode(actor, enc, DecodeMode::Greedy, unused);
        total += tour_length(coords, r.permutation);
    }
    return total / double(eval_set.size());
}

double eval_sample_mean(const PtrNetModel& actor,
                        const std::vector<std::vector<Point>>& eval_set,
                        RngStream& rng) {
    double total = 0.0;
    for (const auto& coords : eval_set) {
        EncodeCache enc = encode(actor, coords);
        DecodeResult r = decode(actor, enc, DecodeMode::Sample, rng);
        total += tour_length(coords, r.permutation);
    }
    return total / double(eval_set.size());
}

namespace {

std::vector<std::vector<Point>> make_instances(int count, int n, RngStream& rng) {
    std::vector<std::vector<Point>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        std::vector<Point> coords(static_cast<std::size_t>(n));
        for (Point& p : coords) {
            p.x = rng.next_double();
            p.y = rng.next_double();
        }
        out.push_back(std::move(coords));
    }
    return out;
}

}  // namespace

TrainResult train(const TrainConfig& config) {
    if (config.batch_size < 1 || config.n_cities < 2)
        throw Error("invalid train config: batch_size or n_cities out of range");

    RngStream master(config.seed);
    RngStream actor_init = master.split(1);
    RngStream critic_init = master.split(2);
    RngStream data_rng = master.split(3);
    RngStream eval_rng = master.split(4);
    RngStream sample_rng = master.split(5);
    RngStream eval_sample_rng = master.split(6);

    TrainResult result{
        PtrNetModel::init(config.embed_dim, config.hidden_dim, actor_init),
        CriticModel::init(config.embed_dim, config.hidden_dim,
                          config.process_rounds, critic_init),
        {}};
    if (config.max_steps == 0) return result;

    const auto eval_set =
        make_instances(config.eval_set_size, config.n_cities, eval_rng);

    double last_critic_loss = 0.0;
    auto record = [&](long step) {
        TrainRecord rec;
        rec.step = step;
        rec.greedy_mean = eval_greedy_mean(result.actor, eval_set);
        rec.sample_mean = eval_sample_mean(result.actor, eval_set, eval_sample_rng);
        rec.critic_loss = last_critic_loss;
        result.log.records.push_back(rec);
    };

    nn::Adam actor_opt(config.adam_actor);
    nn::Adam critic_opt(config.adam_critic);
    record(0);
    for (long step = 1; step <= config.max_steps; ++step) {
        auto batch = make_instances(config.batch_size, config.n_cities, data_rng);
        BatchStats stats = reinforce_step(result.actor, result.critic, batch,
                                          actor_opt, critic_opt, config.grad_clip,
                                          sample_rng);
        last_critic_loss = stats.critic_loss;
        if (step % config.eval_every == 0 || step == config.max_steps) record(step);
    }
    return result;
}

// ---------------------------------------------------------------------------
// checkpoint io

namespace {

constexpr const char* kMagic = "CCPN1";

void write_block(std::ostream& out, const nn::Param& p) {
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(p.value.a.data()),
              std::streamsize(p.value.a.size() * 8));
}

void read_block(std::istream& in, nn::Param& p) {
    in.read(reinterpret_cast<char*>(p.value.a.data()),
            std::streamsize(p.value.a.size() * 8));
    if (!in) throw Error("checkpoint truncated in block '" + p.name + "'");
}

}  // namespace

void save_checkpoint(const PtrNetModel& actor, const CriticModel& critic,
                     const TrainConfig& config, long step, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint: " + path);
    out << kMagic << "\n";
    out << "embed " << actor.embed_dim << " hidden " << actor.hidden_dim
        << " process_rounds " << critic.process_rounds << " n_cities "
        << config.n_cities << " step " << step << "\n";
    auto ap = actor.params();
    auto cp = critic.params();
    out << "blocks " << (ap.size() + cp.size()) << "\n";
    for (const nn::Param* p : ap)
        out << p->name << " " << p->value.rows << " " << p->value.cols << "\n";
    for (const nn::Param* p : cp)
        out << p->name << " " << p->value.rows << " " << p->value.cols << "\n";
    out << "DATA\n";
    for (const nn::Param* p : ap) write_block(out, *p);
    for (const nn::Param* p : cp) write_block(out, *p);
    if (!out) throw Error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);
    std::string magic;
    std::getline(in, magic);
    if (magic != kMagic)
        throw Error("checkpoint version mismatch: expected '" + std::string(kMagic) +
                    "', got '" + magic + "'");

    std::string line;
    std::getline(in, line);
    std::istringstream hdr(line);
    std::string k1, k2, k3, k4, k5;
    int embed = 0, hidden = 0, rounds = 0, n_cities = 0;
    long step = 0;
    if (!(hdr >> k1 >> embed >> k2 >> hidden >> k3 >> rounds >> k4 >> n_cities >>
          k5 >> step) ||
        k1 != "embed" || k2 != "hidden" || k3 != "process_rounds" ||
        k4 != "n_cities" || k5 != "step")
        throw Error("malformed checkpoint header: " + line);

    std::getline(in, line);
    std::istringstream bl(line);
    std::string kb;
    std::size_t n_blocks = 0;
    if (!(bl >> kb >> n_blocks) || kb != "blocks")
        throw Error("malformed checkpoint block count: " + line);

    Checkpoint ck{PtrNetModel{}, CriticModel{}, TrainConfig{}, step};
    RngStream scratch(0);
    ck.actor = PtrNetModel::init(embed, hidden, scratch);
    ck.critic = CriticModel::init(embed, hidden, rounds, scratch);
    ck.config.embed_dim = embed;
    ck.config.hidden_dim = hidden;
    ck.config.process_rounds = rounds;
    ck.config.n_cities = n_cities;

    auto ap = ck.actor.params();
    auto cp = ck.critic.params();
    std::vector<nn::Param*> all(ap.begin(), ap.end());
    all.insert(all.end(), cp.begin(), cp.end());
    if (n_blocks != all.size())
        throw Error("checkpoint block count " + std::to_string(n_blocks) +
                    ", expected " + std::to_string(all.size()));
    for (nn::Param* p : all) {
        std::getline(in, line);
        std::istringstream ls(line);
        std::string name;
        int rows = 0, cols = 0;
        if (!(ls >> name >> rows >> cols))
            throw Error("malformed checkpoint block line: " + line);
        if (name != p->name)
            throw Error("checkpoint block order mismatch: got '" + name +
                        "', expected '" + p->name + "'");
        if (rows != p->value.rows || cols != p->value.cols)
            throw Error("dimension mismatch in block '" + name + "': file " +
                        std::to_string(rows) + "x" + std::to_string(cols) +
                        ", model " + std::to_string(p->value.rows) + "x" +
                        std::to_string(p->value.cols));
    }
    std::getline(in, line);
    if (line != "DATA") throw Error("missing DATA marker in checkpoint");
    for (nn::Param* p : all) read_block(in, *p);
    return ck;
}

void write_train_log_csv(std::ostream& out, const TrainLog& log) {
    out << "step,sample_mean,greedy_mean,critic_loss\n";
    out.precision(17);
    for (const TrainRecord& r : log.records)
        out << r.step << "," << r.sample_mean << "," << r.greedy_mean << ","
            << r.critic_loss << "\n";
}

}  // namespace cctsp
