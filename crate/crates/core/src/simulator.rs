//! Seeded 360-video session simulator.
//!
//! Each experiment is 120 one-second samples of a DASH client streaming over an
//! LTE-like channel. Per second the channel SNR follows an AR(1) fading process
//! around a scenario-dependent base; capacity follows a scaled Shannon bound.
//! Inside the second the client is stepped on a fine tick: it downloads
//! segments chosen by a throughput-based ABR rule, fills and drains its buffer
//! and moves between startup, playing and stalled phases.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from, Rng};
use crate::schema::{KpiVector, KqiVector, PowerScenario, Sample, ScenarioConfig, SESSION_SECONDS};

/// Quality ladder served by the media server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaLadder {
    /// `(resolution_level, bitrate_mbps)`, bitrates strictly increasing.
    pub levels: Vec<(u8, f64)>,
    pub segment_s: f64,
    pub fps: f64,
    pub initial_buffer_ms: f64,
    pub max_buffer_ms: f64,
}

impl Default for MediaLadder {
    fn default() -> Self {
        MediaLadder {
            levels: alloc::vec![(1, 1.0), (2, 1.5), (3, 3.0), (4, 5.0), (5, 9.0)],
            segment_s: 4.0,
            fps: 30.0,
            initial_buffer_ms: 5000.0,
            max_buffer_ms: 50000.0,
        }
    }
}

impl MediaLadder {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::config("media ladder has no levels"));
        }
        if self.levels.windows(2).any(|w| w[1].1 <= w[0].1 || w[1].0 <= w[0].0) {
            return Err(Error::config("ladder bitrates must strictly increase with level"));
        }
        if self.levels.iter().any(|&(l, b)| l == 0 || l > 5 || !(b > 0.0)) {
            return Err(Error::config("ladder levels must be in 1..=5 with positive bitrates"));
        }
        if !(self.segment_s > 0.0) || !(self.initial_buffer_ms > 0.0) || self.max_buffer_ms < self.initial_buffer_ms {
            return Err(Error::config("invalid segment or buffer thresholds"));
        }
        Ok(())
    }

    fn bitrate(&self, idx: usize) -> f64 {
        self.levels[idx].1
    }
}

/// Per-scenario mean SNR in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrBase {
    pub max_pt: f64,
    pub min_pt: f64,
    pub red_pt_noise: f64,
}

impl SnrBase {
    pub fn get(&self, p: PowerScenario) -> f64 {
        match p {
            PowerScenario::MaxPt => self.max_pt,
            PowerScenario::MinPt => self.min_pt,
            PowerScenario::RedPtNoise => self.red_pt_noise,
        }
    }
}

/// Every channel, client and KPI constant of the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatorParams {
    pub ladder: MediaLadder,
    pub snr_base_db: SnrBase,
    pub fading_rho: f64,
    pub fading_sigma_db: f64,
    /// Spectral-efficiency scaler on the Shannon bound.
    pub eta: f64,
    /// Multiplier on the channel capacity; 0 starves the client.
    pub capacity_scale: f64,
    pub abr_safety: f64,
    pub ewma_half_life: f64,
    pub loss_max: f64,
    pub loss_mid_db: f64,
    pub loss_scale_db: f64,
    pub dl_retx_intercept: f64,
    pub dl_retx_slope: f64,
    pub ul_retx_intercept: f64,
    pub ul_retx_slope: f64,
    pub ul_ratio: f64,
    pub ul_floor_mbps: f64,
    pub base_rtt_ms: f64,
    pub queue_alpha_ms: f64,
    pub util_cap: f64,
    pub rsrp_ref_dbm: f64,
    pub carrier_freq_mhz: f64,
    pub wifi_rssi_mean_dbm: f64,
    pub wifi_rssi_std_db: f64,
    pub tick_ms: f64,
}

impl Default for SimulatorParams {
    fn default() -> Self {
        SimulatorParams {
            ladder: MediaLadder::default(),
            snr_base_db: SnrBase { max_pt: 22.0, min_pt: 12.0, red_pt_noise: 4.0 },
            fading_rho: 0.9,
            fading_sigma_db: 1.5,
            eta: 0.35,
            capacity_scale: 1.0,
            abr_safety: 0.8,
            ewma_half_life: 3.0,
            loss_max: 0.3,
            loss_mid_db: 5.0,
            loss_scale_db: 2.0,
            dl_retx_intercept: 40.0,
            dl_retx_slope: 1.5,
            ul_retx_intercept: 10.0,
            ul_retx_slope: 0.4,
            ul_ratio: 0.025,
            ul_floor_mbps: 0.05,
            base_rtt_ms: 35.0,
            queue_alpha_ms: 80.0,
            util_cap: 0.95,
            rsrp_ref_dbm: -75.0,
            carrier_freq_mhz: 2655.0,
            wifi_rssi_mean_dbm: -45.0,
            wifi_rssi_std_db: 2.0,
            tick_ms: 10.0,
        }
    }
}

impl SimulatorParams {
    pub fn validate(&self) -> Result<()> {
        self.ladder.validate()?;
        let checks = [
            (self.fading_rho >= 0.0 && self.fading_rho < 1.0, "fading_rho must be in [0,1)"),
            (self.fading_sigma_db >= 0.0, "fading_sigma_db must be >= 0"),
            (self.eta > 0.0, "eta must be > 0"),
            (self.capacity_scale >= 0.0, "capacity_scale must be >= 0"),
            (self.abr_safety > 0.0 && self.abr_safety <= 1.0, "abr_safety must be in (0,1]"),
            (self.ewma_half_life > 0.0, "ewma_half_life must be > 0"),
            (self.loss_max >= 0.0 && self.loss_max < 1.0, "loss_max must be in [0,1)"),
            (self.loss_scale_db > 0.0, "loss_scale_db must be > 0"),
            (self.util_cap > 0.0 && self.util_cap < 1.0, "util_cap must be in (0,1)"),
            (self.tick_ms > 0.0 && 1000.0 % self.tick_ms == 0.0, "tick_ms must divide 1000"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::config(msg));
            }
        }
        Ok(())
    }

    /// Scaled Shannon capacity in Mbps for a bandwidth in MHz.
    pub fn capacity_mbps(&self, bandwidth_mhz: f64, snr_db: f64) -> f64 {
        self.capacity_scale * self.eta * bandwidth_mhz * libm::log2(1.0 + libm::pow(10.0, snr_db / 10.0))
    }

    /// Fraction of delivered bits lost to residual errors.
    pub fn loss(&self, snr_db: f64) -> f64 {
        self.loss_max / (1.0 + libm::exp((snr_db - self.loss_mid_db) / self.loss_scale_db))
    }

    pub fn latency_ms(&self, utilization: f64) -> f64 {
        let u = utilization.clamp(0.0, self.util_cap);
        self.base_rtt_ms + self.queue_alpha_ms * u / (1.0 - u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub snr_db: f64,
    pub capacity_mbps: f64,
    pub fading_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Startup,
    Playing,
    Stalled,
}

/// Client player state, exposed for inspection of simulated sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    pub buffer_ms: f64,
    pub phase: Phase,
    /// Ladder index of the segment being downloaded.
    pub current_level: usize,
    pub ewma_throughput_mbps: Option<f64>,
    pub startup_ms: f64,
    pub stall_ms_total: f64,
    /// Buffered content as `(ladder index, ms)` runs, oldest first.
    chunks: VecDeque<(usize, f64)>,
    segment_remaining_mbit: f64,
    segment_active_s: f64,
    segment_open: bool,
}

impl ClientState {
    fn new() -> Self {
        ClientState {
            buffer_ms: 0.0,
            phase: Phase::Startup,
            current_level: 0,
            ewma_throughput_mbps: None,
            startup_ms: 0.0,
            stall_ms_total: 0.0,
            chunks: VecDeque::new(),
            segment_remaining_mbit: 0.0,
            segment_active_s: 0.0,
            segment_open: false,
        }
    }

    /// Highest level whose bitrate fits under `safety * ewma`, floor at the lowest.
    fn select_level(&self, p: &SimulatorParams) -> usize {
        match self.ewma_throughput_mbps {
            None => 0,
            Some(tp) => {
                let budget = p.abr_safety * tp;
                p.ladder.levels.iter().rposition(|&(_, b)| b <= budget).unwrap_or(0)
            }
        }
    }

    fn push_content(&mut self, level: usize, ms: f64) {
        match self.chunks.back_mut() {
            Some((l, len)) if *l == level => *len += ms,
            _ => self.chunks.push_back((level, ms)),
        }
        self.buffer_ms += ms;
    }

    /// Plays up to `ms` of buffered content, crediting per-level play time.
    fn play(&mut self, ms: f64, played: &mut [f64]) -> f64 {
        let mut left = ms.min(self.buffer_ms);
        let total = left;
        while left > 0.0 {
            let Some(front) = self.chunks.front_mut() else { break };
            let take = left.min(front.1);
            played[front.0] += take;
            front.1 -= take;
            left -= take;
            if front.1 <= 1e-9 {
                self.chunks.pop_front();
            }
        }
        self.buffer_ms = (self.buffer_ms - total).max(0.0);
        if self.chunks.is_empty() {
            self.buffer_ms = 0.0;
        }
        total
    }
}

/// Per-second trace entry alongside the emitted sample, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondTrace {
    pub channel: ChannelState,
    pub buffer_ms: f64,
    pub phase: Phase,
    /// `(ladder index, ewma at selection)` for every segment started this second.
    pub selections: Vec<(usize, Option<f64>)>,
    pub delivered_mbit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTrace {
    pub samples: Vec<Sample>,
    pub seconds: Vec<SecondTrace>,
}

/// Simulates one 120-second experiment. Pure in `(config, params, seed)`.
pub fn simulate_session(config: &ScenarioConfig, params: &SimulatorParams, experiment_id: u64, seed: u64) -> Result<Vec<Sample>> {
    simulate_session_traced(config, params, experiment_id, seed).map(|t| t.samples)
}

pub fn simulate_session_traced(
    config: &ScenarioConfig,
    params: &SimulatorParams,
    experiment_id: u64,
    seed: u64,
) -> Result<SessionTrace> {
    config.validate()?;
    params.validate()?;
    let mut rng = rng_from(seed, &[]);
    let ladder = &params.ladder;
    let bw = config.bandwidth.mhz() as f64;
    let snr_base = params.snr_base_db.get(config.power_scenario);
    let ewma_keep = libm::pow(0.5, 1.0 / params.ewma_half_life);
    let dt_ms = params.tick_ms;
    let dt_s = dt_ms / 1000.0;
    let ticks = libm::round(1000.0 / dt_ms) as usize;
    let segment_mbit = |idx: usize| ladder.bitrate(idx) * ladder.segment_s;

    let mut fading = 0.0;
    let mut client = ClientState::new();
    let mut samples = Vec::with_capacity(SESSION_SECONDS as usize);
    let mut seconds = Vec::with_capacity(SESSION_SECONDS as usize);

    for t in 0..SESSION_SECONDS {
        let eps: f64 = rng.sample(StandardNormal);
        fading = params.fading_rho * fading + params.fading_sigma_db * eps;
        let snr_db = snr_base + fading;
        let capacity = params.capacity_mbps(bw, snr_db);
        let loss = params.loss(snr_db);
        let goodput = capacity * (1.0 - loss);

        let mut offered_mbit = 0.0;
        let mut delivered_mbit = 0.0;
        let mut played = [0.0f64; 8];
        let mut stall_ms = 0.0;
        let mut selections = Vec::new();

        for _ in 0..ticks {
            // download
            let mut budget = goodput * dt_s;
            while budget > 1e-12 && client.buffer_ms < ladder.max_buffer_ms - 1e-9 {
                if !client.segment_open {
                    client.current_level = client.select_level(params);
                    selections.push((client.current_level, client.ewma_throughput_mbps));
                    client.segment_remaining_mbit = segment_mbit(client.current_level);
                    client.segment_active_s = 0.0;
                    client.segment_open = true;
                }
                let rate = ladder.bitrate(client.current_level);
                let room_mbit = (ladder.max_buffer_ms - client.buffer_ms) / 1000.0 * rate;
                let take = budget.min(client.segment_remaining_mbit).min(room_mbit);
                if take <= 0.0 {
                    break;
                }
                budget -= take;
                delivered_mbit += take;
                offered_mbit += take / (1.0 - loss);
                client.segment_active_s += take / goodput;
                client.segment_remaining_mbit -= take;
                client.push_content(client.current_level, take / rate * 1000.0);
                if client.segment_remaining_mbit <= 1e-12 {
                    let sample_tp = segment_mbit(client.current_level) / client.segment_active_s;
                    client.ewma_throughput_mbps = Some(match client.ewma_throughput_mbps {
                        None => sample_tp,
                        Some(prev) => ewma_keep * prev + (1.0 - ewma_keep) * sample_tp,
                    });
                    client.segment_open = false;
                }
            }
            client.buffer_ms = client.buffer_ms.min(ladder.max_buffer_ms);

            // playback
            match client.phase {
                Phase::Startup => {
                    client.startup_ms += dt_ms;
                    if client.buffer_ms >= ladder.initial_buffer_ms {
                        client.phase = Phase::Playing;
                    }
                }
                Phase::Playing => {
                    let done = client.play(dt_ms, &mut played);
                    if done < dt_ms {
                        stall_ms += dt_ms - done;
                        client.stall_ms_total += dt_ms - done;
                        client.phase = Phase::Stalled;
                    }
                }
                Phase::Stalled => {
                    stall_ms += dt_ms;
                    client.stall_ms_total += dt_ms;
                    if client.buffer_ms >= ladder.initial_buffer_ms {
                        client.phase = Phase::Playing;
                    }
                }
            }
        }

        let played_ms: f64 = played.iter().sum();
        let resolution_level = if played_ms > 0.0 {
            // level shown for the longest part of the second, ties to the lower
            let mut best = 0usize;
            for i in 1..ladder.levels.len() {
                if played[i] > played[best] {
                    best = i;
                }
            }
            ladder.levels[best].0
        } else {
            0
        };
        let utilization = if capacity > 0.0 {
            (offered_mbit / capacity).clamp(0.0, 1.0)
        } else if client.buffer_ms < ladder.max_buffer_ms {
            1.0
        } else {
            0.0
        };
        let latency_ms = params.latency_ms(utilization);
        let dl_retx = poisson(&mut rng, params.dl_retx_intercept - params.dl_retx_slope * snr_db);
        let ul_retx = poisson(&mut rng, params.ul_retx_intercept - params.ul_retx_slope * snr_db);
        let rssi_eps: f64 = rng.sample(StandardNormal);
        let wifi_rssi = params.wifi_rssi_mean_dbm + params.wifi_rssi_std_db * rssi_eps;
        let link_rate = if wifi_rssi >= -50.0 { 866.7 } else { 585.0 };

        samples.push(Sample {
            experiment_id,
            t_s: t,
            config: *config,
            kpis: KpiVector {
                dl_throughput_mbps: delivered_mbit,
                ul_throughput_mbps: params.ul_ratio * delivered_mbit + params.ul_floor_mbps,
                dl_retx_count: dl_retx,
                ul_retx_count: ul_retx,
                sinr_db: snr_db,
                rsrp_dbm: params.rsrp_ref_dbm + config.tx_power_db + fading,
                carrier_freq_mhz: params.carrier_freq_mhz,
                channel_util: utilization,
                cpe_wifi_rssi_dbm: wifi_rssi,
                cpe_link_rate_mbps: link_rate,
            },
            kqis: KqiVector {
                resolution_level,
                frame_rate_fps: (ladder.fps * played_ms / 1000.0).min(ladder.fps),
                initial_startup_ms: client.startup_ms,
                avg_stall_ms: stall_ms,
                client_throughput_mbps: delivered_mbit,
                latency_ms,
            },
        });
        seconds.push(SecondTrace {
            channel: ChannelState { snr_db, capacity_mbps: capacity, fading_db: fading },
            buffer_ms: client.buffer_ms,
            phase: client.phase,
            selections,
            delivered_mbit,
        });
    }
    Ok(SessionTrace { samples, seconds })
}

fn poisson(rng: &mut Rng, lambda: f64) -> u32 {
    if !(lambda > 0.0) {
        return 0;
    }
    let d = Poisson::new(lambda).expect("positive finite rate");
    let v: f64 = d.sample(rng);
    v as u32
}

/// Campaign layout: scenario list, repetitions per scenario and constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub scenarios: Vec<ScenarioConfig>,
    pub experiments_per_config: usize,
    pub params: SimulatorParams,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig { scenarios: ScenarioConfig::campaign(), experiments_per_config: 60, params: SimulatorParams::default() }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::config("campaign has no scenarios"));
        }
        if self.experiments_per_config == 0 {
            return Err(Error::config("experiments_per_config must be >= 1"));
        }
        for s in &self.scenarios {
            s.validate()?;
        }
        self.params.validate()
    }

    /// `(config_index, experiment_index)` for every experiment, in output order.
    pub fn experiments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.scenarios.len()).flat_map(move |c| (0..self.experiments_per_config).map(move |e| (c, e)))
    }

    pub fn experiment_id(&self, config_index: usize, experiment_index: usize) -> u64 {
        (config_index * self.experiments_per_config + experiment_index) as u64
    }

    pub fn experiment_seed(master_seed: u64, config_index: usize, experiment_index: usize) -> u64 {
        crate::rng::derive_seed(master_seed, &[config_index as u64, experiment_index as u64])
    }

    /// Simulates one experiment of the campaign.
    pub fn run_experiment(&self, master_seed: u64, config_index: usize, experiment_index: usize) -> Result<Vec<Sample>> {
        simulate_session(
            &self.scenarios[config_index],
            &self.params,
            self.experiment_id(config_index, experiment_index),
            Self::experiment_seed(master_seed, config_index, experiment_index),
        )
    }
}

/// Generates the whole campaign serially.
pub fn generate_campaign(cfg: &CampaignConfig, master_seed: u64) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.scenarios.len() * cfg.experiments_per_config * SESSION_SECONDS as usize);
    for (c, e) in cfg.experiments() {
        out.extend(cfg.run_experiment(master_seed, c, e)?);
    }
    Ok(out)
}
