#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "aerosynth/server.hpp"

namespace aerosynth {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

// GA-side command queue; the network thread only ever pushes.
class CommandQueue {
public:
    void push(const Command& c) {
        {
            std::lock_guard lk(m_);
            q_.push_back(c);
        }
        cv_.notify_one();
    }
    std::optional<Command> pop(bool wait) {
        std::unique_lock lk(m_);
        if (wait) cv_.wait(lk, [&] { return !q_.empty(); });
        if (q_.empty()) return std::nullopt;
        Command c = q_.front();
        q_.pop_front();
        return c;
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::deque<Command> q_;
};

struct Shared {
    const ServeOptions* opt = nullptr;
    std::mutex prior_mutex;
    std::optional<AdVaeModel> prior;
    std::mutex runs_mutex;
    std::vector<std::pair<std::shared_ptr<CommandQueue>, std::thread>> runs;

    const AdVaeModel* prior_model() {
        std::lock_guard lk(prior_mutex);
        if (!prior) {
            const auto& p = opt->run.prior_path;
            prior = load_or_train(p.empty() ? default_prior_path() : p, AdVaeConfig{}, EnvelopeSpec{}, kPriorSeed);
        }
        return &*prior;
    }

    void shutdown() {
        std::lock_guard lk(runs_mutex);
        for (auto& [q, t] : runs) {
            q->push(Command{CommandKind::Stop});
            if (t.joinable()) t.join();
        }
        runs.clear();
    }
};

class Session : public std::enable_shared_from_this<Session> {
public:
    Session(tcp::socket sock, Shared& shared) : ws_(std::move(sock)), shared_(shared) {}

    void start() {
        ws_.text(true);
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (!ec) self->read();
        });
    }

    // thread-safe: hops onto the session's executor
    void send(std::string frame) {
        net::post(ws_.get_executor(), [self = shared_from_this(), f = std::move(frame)]() mutable {
            self->out_.push_back(std::move(f));
            if (self->out_.size() == 1) self->write();
        });
    }

private:
    void read() {
        ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                if (self->queue_) self->queue_->push(Command{CommandKind::Stop});
                return;
            }
            const std::string text = beast::buffers_to_string(self->buf_.data());
            self->buf_.consume(self->buf_.size());
            self->handle(text);
            self->read();
        });
    }

    void write() {
        if (closed_) {
            out_.clear();
            return;
        }
        ws_.async_write(net::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                self->out_.clear();
                return;
            }
            self->out_.pop_front();
            if (!self->out_.empty()) self->write();
        });
    }

    void handle(const std::string& text) {
        ControlCommand c;
        try {
            c = parse_command(text);
        } catch (const ProtocolError& e) {
            send(error_frame(e.what()).dump());
            return;
        }
        if (c.kind == ControlCommand::Kind::Start) {
            if (queue_) {
                send(error_frame("this session already owns a run").dump());
                return;
            }
            launch(c);
            return;
        }
        if (!queue_ || finished_) {
            send(error_frame(std::string("no active run for ") + std::string(command_name(c.kind))).dump());
            return;
        }
        queue_->push(*to_ga_command(c));
        send(ack_frame(c).dump());
    }

    void launch(const ControlCommand& c) {
        queue_ = std::make_shared<CommandQueue>();
        send(ack_frame(c).dump());
        const ServeOptions& opt = *shared_.opt;
        auto self = shared_from_this();
        auto queue = queue_;
        std::thread t([self, queue, c, &opt, &shared = shared_] {
            try {
                const GaFlags flags = c.flags;
                const AdVaeModel* prior = flags.prior ? shared.prior_model() : nullptr;
                const Pipeline pipe(c.mission->mission, c.mission->physics, opt.run.resolution, flags, prior);
                const Evaluator eval = [&pipe](const NormalizedGenome& g) { return pipe(g); };
                const std::string run_id = make_run_id(c.seed, flags);
                RunHooks hooks;
                hooks.on_generation = [&](const GaState& s) {
                    self->send(generation_message(run_id, s, pipe.grid(s.best.genome)).dump());
                };
                hooks.next_command = [queue](bool wait) { return queue->pop(wait); };
                const RunResult res = run(c.mission->mission, opt.run.ga, flags, c.seed, eval, hooks);
                if (!opt.run.out_dir.empty()) {
                    Json manifest;
                    manifest["run_id"] = run_id;
                    manifest["seed"] = c.seed;
                    manifest["flags"] = flags_to_json(flags);
                    manifest["resolution"] = opt.run.resolution;
                    manifest["ga"] = ga_config_to_json(opt.run.ga);
                    manifest["mission"] = mission_to_json(c.mission->mission);
                    manifest["generations_run"] = res.generations_run;
                    manifest["stopped"] = res.stopped;
                    write_final_artifacts(opt.run.out_dir + "/" + run_id, manifest, res.best, pipe.grid(res.best.genome));
                }
                Json done;
                done["type"] = "finished";
                done["run_id"] = run_id;
                done["generations"] = res.generations_run;
                done["stopped"] = res.stopped;
                done["feasible"] = res.best.eval.breakdown.feasible;
                self->send(done.dump());
            } catch (const std::exception& e) {
                self->send(error_frame(std::string("run failed: ") + e.what()).dump());
            }
            net::post(self->ws_.get_executor(), [self] { self->finished_ = true; });
        });
        std::lock_guard lk(shared_.runs_mutex);
        shared_.runs.emplace_back(queue_, std::move(t));
    }

    websocket::stream<beast::tcp_stream> ws_;
    Shared& shared_;
    beast::flat_buffer buf_;
    std::deque<std::string> out_;
    std::shared_ptr<CommandQueue> queue_;
    bool closed_ = false;
    bool finished_ = false;
};

void accept_loop(tcp::acceptor& acc, Shared& shared) {
    acc.async_accept([&acc, &shared](beast::error_code ec, tcp::socket sock) {
        if (ec) return;
        std::make_shared<Session>(std::move(sock), shared)->start();
        accept_loop(acc, shared);
    });
}

}  // namespace

void serve(const ServeOptions& opt) {
    net::io_context ioc(1);
    tcp::acceptor acc(ioc);
    const tcp::endpoint ep(net::ip::make_address(opt.address), opt.port);
    acc.open(ep.protocol());
    acc.set_option(net::socket_base::reuse_address(true));
    acc.bind(ep);
    acc.listen();
    if (opt.on_listening) opt.on_listening(acc.local_endpoint().port());

    Shared shared;
    shared.opt = &opt;
    accept_loop(acc, shared);

    net::steady_timer tick(ioc);
    std::function<void()> poll = [&] {
        tick.expires_after(std::chrono::milliseconds(50));
        tick.async_wait([&](beast::error_code) {
            if (opt.stop && opt.stop->load()) {
                acc.close();
                ioc.stop();
                return;
            }
            poll();
        });
    };
    poll();
    ioc.run();
    shared.shutdown();
}

}  // namespace aerosynth
