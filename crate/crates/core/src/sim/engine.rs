use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::stats::{batch_means, percentile};
use super::{Horizon, ServiceDistribution, SimConfig, SimResult, RNG_ALGORITHM};
use crate::decode;
use crate::error::{Error, Result};

const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy)]
enum Kind {
    Arrival,
    PrefillDone(usize),
    DecodeJoin(usize),
    StepDone(usize),
    WindowEnd,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: Kind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Request {
    arrival: f64,
    prefill_done: f64,
    decode_join: f64,
    finish: f64,
}

#[derive(Default)]
struct PrefillServer {
    queue: VecDeque<usize>,
    busy: bool,
}

#[derive(Default)]
struct DecodeServer {
    active: Vec<(usize, u32)>,
    pending: VecDeque<usize>,
    stepping: bool,
}

impl DecodeServer {
    fn load(&self) -> usize {
        self.active.len() + self.pending.len()
    }
}

/// Time integral of a piecewise-constant quantity.
#[derive(Default, Clone, Copy)]
struct Area {
    value: f64,
    last: f64,
    area: f64,
}

impl Area {
    fn advance(&mut self, t: f64) {
        self.area += self.value * (t - self.last);
        self.last = t;
    }

    fn add(&mut self, t: f64, delta: f64) {
        self.advance(t);
        self.value += delta;
    }
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    now: f64,
    seq: u64,
    events: BinaryHeap<Reverse<Event>>,
    requests: Vec<Request>,
    prefill: Vec<PrefillServer>,
    decode: Vec<DecodeServer>,
    arrival_rng: ChaCha8Rng,
    routing_rng: ChaCha8Rng,
    service_rng: ChaCha8Rng,
    interarrival: Exp<f64>,
    service: Option<Exp<f64>>,
    mean_service: f64,
    in_prefill: Area,
    prefill_busy: Area,
    decode_busy: Area,
    tokens: u64,
    arrivals_done: bool,
    window_start: Option<(f64, Snapshot)>,
    window_end: Option<(f64, Snapshot)>,
}

#[derive(Clone, Copy)]
struct Snapshot {
    in_prefill: f64,
    prefill_busy: f64,
    decode_busy: f64,
}

fn stream_rng(seed: u64, stream: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(4).wrapping_add(lane));
    rng
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        let mean_service = f64::from(cfg.input_len) / cfg.prefill_max_throughput;
        let service = match cfg.prefill_service {
            ServiceDistribution::Exponential => {
                Some(Exp::new(1.0 / mean_service).expect("positive service rate"))
            }
            ServiceDistribution::Deterministic => None,
        };
        Engine {
            cfg,
            now: 0.0,
            seq: 0,
            events: BinaryHeap::new(),
            requests: Vec::new(),
            prefill: (0..cfg.n_prefill)
                .map(|_| PrefillServer::default())
                .collect(),
            decode: (0..cfg.n_decode).map(|_| DecodeServer::default()).collect(),
            arrival_rng: stream_rng(cfg.seed, cfg.stream, 0),
            routing_rng: stream_rng(cfg.seed, cfg.stream, 1),
            service_rng: stream_rng(cfg.seed, cfg.stream, 2),
            interarrival: Exp::new(cfg.arrival_rate).expect("positive arrival rate"),
            service,
            mean_service,
            in_prefill: Area::default(),
            prefill_busy: Area::default(),
            decode_busy: Area::default(),
            tokens: 0,
            arrivals_done: false,
            window_start: None,
            window_end: None,
        }
    }

    fn schedule(&mut self, time: f64, kind: Kind) {
        self.seq += 1;
        self.events.push(Reverse(Event {
            time,
            seq: self.seq,
            kind,
        }));
    }

    fn snapshot(&mut self) -> Snapshot {
        self.in_prefill.advance(self.now);
        self.prefill_busy.advance(self.now);
        self.decode_busy.advance(self.now);
        Snapshot {
            in_prefill: self.in_prefill.area,
            prefill_busy: self.prefill_busy.area,
            decode_busy: self.decode_busy.area,
        }
    }

    fn warmup_boundary_reached(&self, idx: usize) -> bool {
        match self.cfg.horizon {
            Horizon::Requests(n) => idx as u64 >= (self.cfg.warmup * n as f64).ceil() as u64,
            Horizon::Time(h) => self.now >= self.cfg.warmup * h,
        }
    }

    fn run(&mut self) {
        let first = self.interarrival.sample(&mut self.arrival_rng);
        self.schedule_arrival(first);
        while let Some(Reverse(ev)) = self.events.pop() {
            self.now = ev.time;
            match ev.kind {
                Kind::Arrival => self.on_arrival(),
                Kind::PrefillDone(i) => self.on_prefill_done(i),
                Kind::DecodeJoin(r) => self.on_decode_join(r),
                Kind::StepDone(i) => self.on_step_done(i),
                Kind::WindowEnd => self.close_window(),
            }
        }
    }

    fn schedule_arrival(&mut self, at: f64) {
        if let Horizon::Time(h) = self.cfg.horizon {
            if at > h {
                self.schedule(h, Kind::WindowEnd);
                return;
            }
        }
        self.schedule(at, Kind::Arrival);
    }

    fn close_window(&mut self) {
        self.arrivals_done = true;
        let snap = self.snapshot();
        self.window_end = Some((self.now, snap));
    }

    fn on_arrival(&mut self) {
        let idx = self.requests.len();
        self.requests.push(Request {
            arrival: self.now,
            ..Default::default()
        });
        if self.window_start.is_none() && self.warmup_boundary_reached(idx) {
            let snap = self.snapshot();
            self.window_start = Some((self.now, snap));
        }
        let server = self.routing_rng.random_range(0..self.prefill.len());
        self.in_prefill.add(self.now, 1.0);
        if self.prefill[server].busy {
            self.prefill[server].queue.push_back(idx);
        } else {
            self.start_prefill(server, idx);
        }
        match self.cfg.horizon {
            Horizon::Requests(n) if self.requests.len() as u64 >= n => {
                self.close_window();
            }
            _ => {
                let next = self.now + self.interarrival.sample(&mut self.arrival_rng);
                self.schedule_arrival(next);
            }
        }
    }

    fn start_prefill(&mut self, server: usize, req: usize) {
        let s = &mut self.prefill[server];
        s.busy = true;
        // the request in service sits at the front of the queue
        s.queue.push_front(req);
        self.prefill_busy.add(self.now, 1.0);
        let dur = match &self.service {
            Some(exp) => exp.sample(&mut self.service_rng),
            None => self.mean_service,
        };
        self.schedule(self.now + dur, Kind::PrefillDone(server));
    }

    fn on_prefill_done(&mut self, server: usize) {
        let req = self.prefill[server]
            .queue
            .pop_front()
            .expect("busy server holds a request");
        self.prefill[server].busy = false;
        self.prefill_busy.add(self.now, -1.0);
        self.in_prefill.add(self.now, -1.0);
        self.tokens += u64::from(self.cfg.input_len);
        self.requests[req].prefill_done = self.now;
        self.schedule(self.now + self.cfg.kv_transfer_delay, Kind::DecodeJoin(req));
        if let Some(next) = self.prefill[server].queue.pop_front() {
            self.start_prefill(server, next);
        }
    }

    fn on_decode_join(&mut self, req: usize) {
        self.requests[req].decode_join = self.now;
        let target = (0..self.decode.len())
            .min_by_key(|&i| (self.decode[i].load(), i))
            .expect("at least one decode instance");
        self.decode[target].pending.push_back(req);
        if !self.decode[target].stepping {
            self.start_step(target);
        }
    }

    fn admit(&mut self, server: usize) {
        let cap = self.cfg.decode_batch_cap.map_or(usize::MAX, |c| c as usize);
        let s = &mut self.decode[server];
        while s.active.len() < cap {
            match s.pending.pop_front() {
                Some(r) => s.active.push((r, 0)),
                None => break,
            }
        }
    }

    fn start_step(&mut self, server: usize) {
        self.admit(server);
        let batch = self.decode[server].active.len();
        if batch == 0 {
            if self.decode[server].stepping {
                self.decode[server].stepping = false;
                self.decode_busy.add(self.now, -1.0);
            }
            return;
        }
        if !self.decode[server].stepping {
            self.decode[server].stepping = true;
            self.decode_busy.add(self.now, 1.0);
        }
        let tpot = decode::tpot_clamped(&self.cfg.decode_curve, batch as f64);
        self.schedule(self.now + tpot, Kind::StepDone(server));
    }

    fn on_step_done(&mut self, server: usize) {
        let out = self.cfg.output_len;
        let now = self.now;
        let mut produced = 0u64;
        let requests = &mut self.requests;
        self.decode[server].active.retain_mut(|(r, done)| {
            *done += 1;
            produced += 1;
            if *done >= out {
                requests[*r].finish = now;
                false
            } else {
                true
            }
        });
        self.tokens += produced;
        self.start_step(server);
    }

    fn result(self) -> Result<SimResult> {
        let cfg = self.cfg;
        let (Some((t0, s0)), Some((t1, s1))) = (self.window_start, self.window_end) else {
            return Err(Error::invalid("horizon", "no arrivals after warmup"));
        };
        let duration = t1 - t0;
        if duration <= 0.0 {
            return Err(Error::invalid("horizon", "measurement window is empty"));
        }
        let measured: Vec<&Request> = self
            .requests
            .iter()
            .filter(|r| r.arrival >= t0 && r.arrival <= t1)
            .collect();

        let kv = cfg.kv_transfer_delay;
        let sojourn: Vec<f64> = measured
            .iter()
            .map(|r| r.prefill_done - r.arrival)
            .collect();
        let ttft: Vec<f64> = sojourn.iter().map(|s| s + kv).collect();
        let tpot: Vec<f64> = measured
            .iter()
            .map(|r| (r.finish - r.decode_join) / f64::from(cfg.output_len))
            .collect();

        let sojourn_est = batch_means(&sojourn, cfg.batches, CONFIDENCE);
        let ttft_est = batch_means(&ttft, cfg.batches, CONFIDENCE);
        let mut sorted = ttft.clone();
        sorted.sort_by(f64::total_cmp);
        let tpot_mean = if tpot.is_empty() {
            0.0
        } else {
            tpot.iter().sum::<f64>() / tpot.len() as f64
        };

        let finished_in_window = self
            .requests
            .iter()
            .filter(|r| r.finish >= t0 && r.finish <= t1)
            .count() as f64;
        let per_request_tokens = f64::from(cfg.input_len) + f64::from(cfg.output_len);

        let mu = 1.0 / self.mean_service;
        let per_instance_lambda = cfg.arrival_rate / f64::from(cfg.n_prefill);
        let decode_capacity = cfg
            .decode_curve
            .points()
            .iter()
            .map(|p| p.throughput())
            .fold(0.0, f64::max);
        let decode_demand = cfg.arrival_rate / f64::from(cfg.n_decode) * f64::from(cfg.output_len);

        Ok(SimResult {
            ttft_mean: ttft_est.mean,
            ttft_p50: percentile(&sorted, 0.50),
            ttft_p99: percentile(&sorted, 0.99),
            ttft_ci_half_width: ttft_est.half_width,
            prefill_sojourn: sojourn_est,
            tpot_mean,
            completed_requests: self.requests.iter().filter(|r| r.finish > 0.0).count() as u64,
            measured_requests: measured.len() as u64,
            tokens_accounted: self.tokens,
            total_token_throughput: finished_in_window * per_request_tokens / duration,
            prefill_utilization: (s1.prefill_busy - s0.prefill_busy)
                / (duration * f64::from(cfg.n_prefill)),
            decode_utilization: (s1.decode_busy - s0.decode_busy)
                / (duration * f64::from(cfg.n_decode)),
            mean_prefill_queue_len: (s1.in_prefill - s0.in_prefill) / duration,
            observed_arrival_rate: measured.len() as f64 / duration,
            overloaded: per_instance_lambda >= mu || decode_demand > decode_capacity,
            rng_algorithm: RNG_ALGORITHM,
        })
    }
}

pub(super) fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg);
    engine.run();
    debug_assert!(engine.arrivals_done);
    engine.result()
}
