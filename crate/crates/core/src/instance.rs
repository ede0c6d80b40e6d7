//! BAN instances, the radio energy model and the random instance generator.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version written to (and required from) instance files.
pub const INSTANCE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("no amplifier energy configured for path-loss exponent {0}")]
    UnknownExponent(f64),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("unsupported instance format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance document: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BodyPosition {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BodyPosition { x, y, z }
    }

    pub fn distance(&self, other: &BodyPosition) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmpEntry {
    pub lambda: f64,
    /// nJ/bit.
    pub e_tx_amp: f64,
}

/// Transceiver energy constants. Energies are in nJ/bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub e_tx_circ: f64,
    pub e_rx_circ: f64,
    pub amp_table: Vec<AmpEntry>,
    pub lambda_los: f64,
    pub lambda_nlos: f64,
}

impl EnergyParams {
    /// Nordic nRF2401 constants with the usual LOS (3.38) and NLOS (5.90)
    /// on-body path-loss exponents.
    pub fn nrf2401() -> Self {
        EnergyParams {
            e_tx_circ: 16.7,
            e_rx_circ: 36.1,
            amp_table: vec![
                AmpEntry { lambda: 3.38, e_tx_amp: 1.97 },
                AmpEntry { lambda: 5.90, e_tx_amp: 7990.0 },
            ],
            lambda_los: 3.38,
            lambda_nlos: 5.90,
        }
    }

    pub fn amp(&self, lambda: f64) -> Result<f64, InstanceError> {
        self.amp_table
            .iter()
            .find(|e| e.lambda == lambda)
            .map(|e| e.e_tx_amp)
            .ok_or(InstanceError::UnknownExponent(lambda))
    }

    pub fn lambda_for(&self, link: LinkKind) -> f64 {
        match link {
            LinkKind::Los => self.lambda_los,
            LinkKind::Nlos => self.lambda_nlos,
        }
    }

    fn validate(&self) -> Result<(), InstanceError> {
        let energies = [self.e_tx_circ, self.e_rx_circ]
            .into_iter()
            .chain(self.amp_table.iter().map(|e| e.e_tx_amp));
        for e in energies {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(InstanceError::Invalid(format!("negative or non-finite energy {e}")));
            }
        }
        if self.amp_table.iter().any(|e| !(e.lambda > 0.0)) {
            return Err(InstanceError::Invalid("path-loss exponents must be positive".into()));
        }
        self.amp(self.lambda_los)?;
        self.amp(self.lambda_nlos)?;
        Ok(())
    }
}

/// Energy (nJ when `params` is in nJ/bit) spent transmitting `v` bits over `delta` meters.
pub fn energy_tx(v: f64, delta: f64, lambda: f64, params: &EnergyParams) -> Result<f64, InstanceError> {
    let amp = params.amp(lambda)?;
    Ok(params.e_tx_circ * v + amp * delta.powf(lambda) * v)
}

/// Energy spent receiving `v` bits.
pub fn energy_rx(v: f64, params: &EnergyParams) -> f64 {
    params.e_rx_circ * v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    #[serde(rename = "LOS")]
    Los,
    #[serde(rename = "NLOS")]
    Nlos,
}

/// Line-of-sight classification of device pairs. Pairs not listed are LOS.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LosPredicate {
    /// Unordered pairs, each stored with the smaller id first.
    pub nlos_pairs: BTreeSet<(String, String)>,
}

impl LosPredicate {
    pub fn link(&self, a: &str, b: &str) -> LinkKind {
        let key = if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        if self.nlos_pairs.contains(&key) {
            LinkKind::Nlos
        } else {
            LinkKind::Los
        }
    }

    pub fn set_nlos(&mut self, a: &str, b: &str) {
        let key = if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.nlos_pairs.insert(key);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateSpec {
    Constant { rate: f64 },
    Variable { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Biosensor {
    pub id: String,
    pub position: BodyPosition,
    pub rate_spec: RateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sink {
    pub id: String,
    pub position: BodyPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayCandidate {
    pub id: String,
    pub position: BodyPosition,
    /// bit/s.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupleRate {
    pub biosensor: String,
    pub sink: String,
    /// bit/s.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub rates: Vec<CoupleRate>,
}

impl Scenario {
    pub fn rate(&self, biosensor: &str, sink: &str) -> f64 {
        self.rates
            .iter()
            .find(|r| r.biosensor == biosensor && r.sink == sink)
            .map_or(0.0, |r| r.rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanInstance {
    pub name: String,
    pub biosensors: Vec<Biosensor>,
    pub sinks: Vec<Sink>,
    pub relays: Vec<RelayCandidate>,
    pub energy: EnergyParams,
    pub tx_range: f64,
    pub relay_budget: usize,
    pub scenarios: Vec<Scenario>,
    pub los_predicate: LosPredicate,
}

#[derive(Serialize, Deserialize)]
struct InstanceDocument {
    format_version: u32,
    #[serde(flatten)]
    instance: BanInstance,
}

impl BanInstance {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let invalid = |m: String| Err(InstanceError::Invalid(m));
        self.energy.validate()?;
        if !(self.tx_range > 0.0 && self.tx_range.is_finite()) {
            return invalid(format!("tx_range must be positive, got {}", self.tx_range));
        }
        if self.scenarios.is_empty() {
            return invalid("at least one scenario is required".into());
        }
        let mut ids = BTreeSet::new();
        let positions = self
            .biosensors
            .iter()
            .map(|b| (&b.id, &b.position))
            .chain(self.sinks.iter().map(|s| (&s.id, &s.position)))
            .chain(self.relays.iter().map(|r| (&r.id, &r.position)));
        for (id, pos) in positions {
            if !ids.insert(id.as_str()) {
                return invalid(format!("duplicate device id {id}"));
            }
            if !pos.is_finite() {
                return invalid(format!("device {id} has a non-finite position"));
            }
        }
        for b in &self.biosensors {
            match b.rate_spec {
                RateSpec::Constant { rate } if !(rate >= 0.0) => {
                    return invalid(format!("biosensor {} has a negative rate", b.id))
                }
                RateSpec::Variable { lo, hi } if !(lo >= 0.0 && lo <= hi) => {
                    return invalid(format!("biosensor {} has an invalid rate range", b.id))
                }
                _ => {}
            }
        }
        if let Some(r) = self.relays.iter().find(|r| !(r.capacity >= 0.0)) {
            return invalid(format!("relay {} has a negative capacity", r.id));
        }
        let key_set = |s: &Scenario| -> BTreeSet<(String, String)> {
            s.rates.iter().map(|r| (r.biosensor.clone(), r.sink.clone())).collect()
        };
        let reference = key_set(&self.scenarios[0]);
        let is_bio = |id: &str| self.biosensors.iter().any(|b| b.id == id);
        let is_sink = |id: &str| self.sinks.iter().any(|s| s.id == id);
        for s in &self.scenarios {
            if key_set(s) != reference || s.rates.len() != reference.len() {
                return invalid(format!("scenario {} has a different couple key set", s.id));
            }
            for r in &s.rates {
                if !(r.rate >= 0.0 && r.rate.is_finite()) {
                    return invalid(format!("scenario {} has an invalid rate", s.id));
                }
                if !is_bio(&r.biosensor) || !is_sink(&r.sink) {
                    return invalid(format!(
                        "scenario {} references unknown couple ({}, {})",
                        s.id, r.biosensor, r.sink
                    ));
                }
            }
        }
        if !self.scenarios.iter().any(|s| s.rates.iter().any(|r| r.rate > 0.0)) {
            return invalid("no biosensor-sink couple has positive demand".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = InstanceDocument { format_version: INSTANCE_FORMAT_VERSION, instance: self.clone() };
        serde_json::to_string_pretty(&doc).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let doc: InstanceDocument = serde_json::from_str(text)?;
        if doc.format_version != INSTANCE_FORMAT_VERSION {
            return Err(InstanceError::Version { found: doc.format_version, expected: INSTANCE_FORMAT_VERSION });
        }
        doc.instance.validate()?;
        Ok(doc.instance)
    }

    pub fn write(&self, path: &Path) -> Result<(), InstanceError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, InstanceError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// How generated biosensors pick the sinks they report to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinkAssignment {
    /// Each biosensor reports to its closest sink (ties by sink id).
    Nearest,
    /// Each biosensor reports to every sink.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_biosensors: usize,
    pub n_sinks: usize,
    pub n_relays: usize,
    pub n_scenarios: usize,
    pub tx_range: f64,
    pub relay_capacity: f64,
    /// `None` means `|R|`.
    pub relay_budget: Option<usize>,
    pub constant_fraction: f64,
    pub constant_rates: Vec<f64>,
    pub variable_range: (f64, f64),
    /// Extent of the sampling box in meters (x, y, z).
    pub body_box: (f64, f64, f64),
    pub p_nlos: f64,
    pub sink_assignment: SinkAssignment,
    pub biosensor_positions: Option<Vec<BodyPosition>>,
    pub sink_positions: Option<Vec<BodyPosition>>,
    pub energy: EnergyParams,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_biosensors: 16,
            n_sinks: 2,
            n_relays: 400,
            n_scenarios: 25,
            tx_range: 0.3,
            relay_capacity: 250_000.0,
            relay_budget: None,
            constant_fraction: 0.5,
            constant_rates: vec![100.0, 150.0, 200.0],
            variable_range: (100.0, 200.0),
            body_box: (0.5, 0.4, 1.5),
            p_nlos: 0.3,
            sink_assignment: SinkAssignment::Nearest,
            biosensor_positions: None,
            sink_positions: None,
            energy: EnergyParams::nrf2401(),
        }
    }
}

fn id_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

fn sample_position(rng: &mut ChaCha8Rng, extent: (f64, f64, f64)) -> BodyPosition {
    BodyPosition::new(
        rng.gen::<f64>() * extent.0,
        rng.gen::<f64>() * extent.1,
        rng.gen::<f64>() * extent.2,
    )
}

/// Generates a random instance; the result is a pure function of `(config, seed)`.
pub fn generate_instance(config: &GeneratorConfig, seed: u64) -> Result<BanInstance, InstanceError> {
    let gen_err = |m: String| Err(InstanceError::Generation(m));
    if config.n_biosensors == 0 || config.n_sinks == 0 || config.n_scenarios == 0 {
        return gen_err("need at least one biosensor, one sink and one scenario".into());
    }
    if !(config.tx_range > 0.0) {
        return gen_err(format!("tx_range must be positive, got {}", config.tx_range));
    }
    if !(0.0..=1.0).contains(&config.constant_fraction) || !(0.0..=1.0).contains(&config.p_nlos) {
        return gen_err("constant_fraction and p_nlos must lie in [0, 1]".into());
    }
    if config.constant_fraction > 0.0 && config.constant_rates.is_empty() {
        return gen_err("constant_rates is empty".into());
    }
    let (lo, hi) = config.variable_range;
    if !(lo >= 0.0 && lo <= hi) {
        return gen_err(format!("invalid variable rate range [{lo}, {hi}]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let bio_w = id_width(config.n_biosensors);
    let biosensor_positions: Vec<BodyPosition> = match &config.biosensor_positions {
        Some(p) if p.len() == config.n_biosensors => p.clone(),
        Some(p) => return gen_err(format!("{} biosensor positions for {} biosensors", p.len(), config.n_biosensors)),
        None => (0..config.n_biosensors).map(|_| sample_position(&mut rng, config.body_box)).collect(),
    };
    let sink_positions: Vec<BodyPosition> = match &config.sink_positions {
        Some(p) if p.len() == config.n_sinks => p.clone(),
        Some(p) => return gen_err(format!("{} sink positions for {} sinks", p.len(), config.n_sinks)),
        None => (0..config.n_sinks).map(|_| sample_position(&mut rng, config.body_box)).collect(),
    };

    let n_constant = (config.constant_fraction * config.n_biosensors as f64).round() as usize;
    let biosensors: Vec<Biosensor> = biosensor_positions
        .into_iter()
        .enumerate()
        .map(|(i, position)| {
            let rate_spec = if i < n_constant {
                let k = rng.gen_range(0..config.constant_rates.len());
                RateSpec::Constant { rate: config.constant_rates[k] }
            } else {
                RateSpec::Variable { lo, hi }
            };
            Biosensor { id: format!("b{i:0bio_w$}"), position, rate_spec }
        })
        .collect();
    let sink_w = id_width(config.n_sinks);
    let sinks: Vec<Sink> = sink_positions
        .into_iter()
        .enumerate()
        .map(|(i, position)| Sink { id: format!("s{i:0sink_w$}"), position })
        .collect();
    let relay_w = id_width(config.n_relays);
    let relays: Vec<RelayCandidate> = (0..config.n_relays)
        .map(|i| RelayCandidate {
            id: format!("r{i:0relay_w$}"),
            position: sample_position(&mut rng, config.body_box),
            capacity: config.relay_capacity,
        })
        .collect();

    // Only pairs within range can ever carry a link, so only those are classified.
    let mut los_predicate = LosPredicate::default();
    let devices: Vec<(&str, &BodyPosition)> = biosensors
        .iter()
        .map(|b| (b.id.as_str(), &b.position))
        .chain(relays.iter().map(|r| (r.id.as_str(), &r.position)))
        .chain(sinks.iter().map(|s| (s.id.as_str(), &s.position)))
        .collect();
    for i in 0..devices.len() {
        for j in (i + 1)..devices.len() {
            if devices[i].1.distance(devices[j].1) <= config.tx_range && rng.gen::<f64>() < config.p_nlos {
                los_predicate.set_nlos(devices[i].0, devices[j].0);
            }
        }
    }

    let mut couples: Vec<(usize, usize)> = Vec::new();
    for (bi, b) in biosensors.iter().enumerate() {
        match config.sink_assignment {
            SinkAssignment::All => couples.extend((0..sinks.len()).map(|si| (bi, si))),
            SinkAssignment::Nearest => {
                let nearest = (0..sinks.len())
                    .min_by(|&a, &c| {
                        let da = b.position.distance(&sinks[a].position);
                        let dc = b.position.distance(&sinks[c].position);
                        da.total_cmp(&dc)
                    })
                    .expect("at least one sink");
                couples.push((bi, nearest));
            }
        }
    }
    let scen_w = id_width(config.n_scenarios);
    let scenarios: Vec<Scenario> = (0..config.n_scenarios)
        .map(|k| {
            let rates = couples
                .iter()
                .map(|&(bi, si)| {
                    let rate = match biosensors[bi].rate_spec {
                        RateSpec::Constant { rate } => rate,
                        RateSpec::Variable { lo, hi } => {
                            if hi > lo {
                                rng.gen_range(lo..=hi)
                            } else {
                                lo
                            }
                        }
                    };
                    CoupleRate { biosensor: biosensors[bi].id.clone(), sink: sinks[si].id.clone(), rate }
                })
                .collect();
            Scenario { id: format!("sigma{k:0scen_w$}"), rates }
        })
        .collect();

    let tx_range = config.tx_range;
    let has_out_link = biosensors.iter().any(|b| {
        relays.iter().any(|r| b.position.distance(&r.position) <= tx_range)
            || sinks.iter().any(|s| b.position.distance(&s.position) <= tx_range)
    });
    if !has_out_link {
        return gen_err(format!(
            "no biosensor has a relay or sink within {tx_range} m; no arc can exist"
        ));
    }

    let instance = BanInstance {
        name: format!("gen-{seed}"),
        biosensors,
        sinks,
        relay_budget: config.relay_budget.unwrap_or(config.n_relays),
        relays,
        energy: config.energy.clone(),
        tx_range,
        scenarios,
        los_predicate,
    };
    instance.validate().map_err(|e| InstanceError::Generation(e.to_string()))?;
    Ok(instance)
}
