//! In-process simulation of the neighbor-to-neighbor computation of the
//! network-wide allocation constants.
//!
//! Each transmitting terminal knows only its own hop. A single message travels
//! from the first terminal to the last, and every terminal adds its link
//! metrics (`1/R_n`, `1/E_n`, `ln(E_n)/E_n` for both exponents) to the running
//! sums. The last terminal turns the totals into `ln M`, `lambda_r` and
//! `lambda_sp` and broadcasts them; every terminal then derives its own
//! blocklength from the broadcast and its local state alone.
//!
//! Integer repair of the blocklengths needs the fractional remainders of all
//! hops, which no terminal has, so terminals derive the real-valued and
//! floored blocklengths. These match the centralized computation bit for bit
//! because both paths run the same operations in the same order.

use std::cell::RefCell;

use serde::Serialize;

use crate::allocation::{
    codebook_size, exponent_metrics, floor_blocks, information_continuous_blocks,
    lagrange_constant, reliability_block, reliability_optimal_blocks, CodebookSize,
};
use crate::channel::HopChannel;
use crate::error::{Error, Result};
use crate::exponents::{random_coding_exponent, sphere_packing_exponent};

/// The five running sums carried by the forward message.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Accumulators {
    pub inv_rate: f64,
    pub inv_exp_rc: f64,
    pub inv_exp_sp: f64,
    pub logexp_over_exp_rc: f64,
    pub logexp_over_exp_sp: f64,
}

/// Running sums after visiting hops `0..=hop_index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricMessage {
    pub hop_index: usize,
    pub accumulators: Accumulators,
}

/// Constants computed by the last terminal and sent to every terminal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Broadcast {
    pub total_q: u64,
    pub codebook: CodebookSize,
    pub lambda_r: f64,
    pub lambda_sp: f64,
}

/// Blocklengths a terminal derives for its own hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalBlocks {
    pub hop: usize,
    pub rate: f64,
    pub info_continuous_real: f64,
    pub info_continuous: i64,
    pub reliability_rc_real: f64,
    pub reliability_rc: i64,
    pub reliability_sp_real: f64,
    pub reliability_sp: i64,
}

impl LocalBlocks {
    /// Field-by-field equality on the bit patterns of the floats.
    pub fn bit_eq(&self, other: &LocalBlocks) -> bool {
        self.hop == other.hop
            && self.rate.to_bits() == other.rate.to_bits()
            && self.info_continuous_real.to_bits() == other.info_continuous_real.to_bits()
            && self.info_continuous == other.info_continuous
            && self.reliability_rc_real.to_bits() == other.reliability_rc_real.to_bits()
            && self.reliability_rc == other.reliability_rc
            && self.reliability_sp_real.to_bits() == other.reliability_sp_real.to_bits()
            && self.reliability_sp == other.reliability_sp
    }
}

/// One recorded read of a hop's channel state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub reader: usize,
    pub owner: usize,
}

#[derive(Debug, Default)]
pub struct AccessLog {
    reads: RefCell<Vec<Access>>,
}

impl AccessLog {
    fn record(&self, reader: usize, owner: usize) {
        self.reads.borrow_mut().push(Access { reader, owner });
    }

    pub fn reads(&self) -> Vec<Access> {
        self.reads.borrow().clone()
    }

    pub fn non_local_reads(&self) -> usize {
        self.reads
            .borrow()
            .iter()
            .filter(|a| a.reader != a.owner)
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct NodeState {
    index: usize,
    local_channel: HopChannel,
    pub local_rate: f64,
    pub received_broadcast: Option<Broadcast>,
}

impl NodeState {
    pub fn new(index: usize, local_channel: HopChannel, local_rate: f64) -> Self {
        NodeState {
            index,
            local_channel,
            local_rate,
            received_broadcast: None,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Access to this node's channel state on behalf of node `reader`.
    pub fn channel(&self, reader: usize, log: &AccessLog) -> &HopChannel {
        log.record(reader, self.index);
        &self.local_channel
    }

    fn local_exponents(&self, log: &AccessLog) -> Result<(f64, f64)> {
        let ch = self.channel(self.index, log);
        let rc = random_coding_exponent(self.local_rate, ch).map_err(|e| e.at_hop(self.index))?;
        let sp = sphere_packing_exponent(self.local_rate, ch).map_err(|e| e.at_hop(self.index))?;
        if rc.exponent <= 0.0 || sp.exponent <= 0.0 {
            return Err(Error::infeasible(
                Some(self.index),
                format!(
                    "rate {} leaves a zero exponent (capacity {})",
                    self.local_rate,
                    ch.capacity()
                ),
            ));
        }
        Ok((rc.exponent, sp.exponent))
    }

    /// Adds this hop's link costs to an incoming message.
    fn accumulate(&self, msg: &mut MetricMessage, log: &AccessLog) -> Result<()> {
        let (e_rc, e_sp) = self.local_exponents(log)?;
        let (inv_rc, log_rc) = exponent_metrics(e_rc);
        let (inv_sp, log_sp) = exponent_metrics(e_sp);
        let acc = &mut msg.accumulators;
        acc.inv_rate += 1.0 / self.local_rate;
        acc.inv_exp_rc += inv_rc;
        acc.inv_exp_sp += inv_sp;
        acc.logexp_over_exp_rc += log_rc;
        acc.logexp_over_exp_sp += log_sp;
        msg.hop_index = self.index;
        Ok(())
    }

    /// Blocklengths from the broadcast constants and local state only.
    pub fn derive_blocks(&self, log: &AccessLog) -> Result<LocalBlocks> {
        let bc = self.received_broadcast.ok_or_else(|| {
            Error::infeasible(Some(self.index), "no broadcast received")
        })?;
        let (e_rc, e_sp) = self.local_exponents(log)?;
        let info = bc.codebook.ln_m / self.local_rate;
        let rc = reliability_block(e_rc, bc.lambda_r);
        let sp = reliability_block(e_sp, bc.lambda_sp);
        Ok(LocalBlocks {
            hop: self.index,
            rate: self.local_rate,
            info_continuous_real: info,
            info_continuous: floor_blocks(info),
            reliability_rc_real: rc,
            reliability_rc: floor_blocks(rc),
            reliability_sp_real: sp,
            reliability_sp: floor_blocks(sp),
        })
    }
}

/// One line of the message trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub from: usize,
    pub to: usize,
    pub accumulators: Accumulators,
}

/// The linear chain of transmitting terminals with its message schedule.
#[derive(Debug)]
pub struct Simulation {
    nodes: Vec<NodeState>,
    log: AccessLog,
    trace: Vec<TraceRecord>,
    forward_messages: usize,
    broadcast_deliveries: usize,
}

impl Simulation {
    pub fn new(channels: Vec<HopChannel>, rates: &[f64]) -> Result<Self> {
        if channels.is_empty() || channels.len() != rates.len() {
            return Err(Error::domain(format!(
                "{} channels for {} rates",
                channels.len(),
                rates.len()
            )));
        }
        if let Some(n) = rates.iter().position(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::infeasible(Some(n), "rate must be positive"));
        }
        let nodes = channels
            .into_iter()
            .zip(rates)
            .enumerate()
            .map(|(i, (ch, &r))| NodeState::new(i, ch, r))
            .collect();
        Ok(Simulation {
            nodes,
            log: AccessLog::default(),
            trace: Vec::new(),
            forward_messages: 0,
            broadcast_deliveries: 0,
        })
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn access_log(&self) -> &AccessLog {
        &self.log
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn forward_messages(&self) -> usize {
        self.forward_messages
    }

    pub fn broadcast_deliveries(&self) -> usize {
        self.broadcast_deliveries
    }

    fn push_trace(&mut self, from: usize, to: usize, accumulators: Accumulators) {
        let step = self.trace.len();
        self.trace.push(TraceRecord {
            step,
            from,
            to,
            accumulators,
        });
    }

    /// Passes the metric message from the first terminal to the last.
    pub fn forward_pass(&mut self) -> Result<MetricMessage> {
        let mut msg = MetricMessage {
            hop_index: 0,
            accumulators: Accumulators::default(),
        };
        let n = self.nodes.len();
        for i in 0..n {
            self.nodes[i].accumulate(&mut msg, &self.log)?;
            if i + 1 < n {
                self.forward_messages += 1;
                self.push_trace(i, i + 1, msg.accumulators);
            }
        }
        Ok(msg)
    }

    /// The last terminal computes the constants and delivers them to every
    /// terminal, itself included.
    pub fn compute_and_broadcast(&mut self, final_msg: &MetricMessage, total_q: u64) -> Broadcast {
        let acc = final_msg.accumulators;
        let bc = Broadcast {
            total_q,
            codebook: codebook_size(total_q, acc.inv_rate),
            lambda_r: lagrange_constant(acc.inv_exp_rc, acc.logexp_over_exp_rc, total_q),
            lambda_sp: lagrange_constant(acc.inv_exp_sp, acc.logexp_over_exp_sp, total_q),
        };
        let last = self.nodes.len() - 1;
        for i in 0..self.nodes.len() {
            self.nodes[i].received_broadcast = Some(bc);
            self.broadcast_deliveries += 1;
            self.push_trace(last, i, acc);
        }
        bc
    }

    pub fn derive_all(&self) -> Result<Vec<LocalBlocks>> {
        self.nodes.iter().map(|n| n.derive_blocks(&self.log)).collect()
    }
}

/// Result of a full distributed run next to its centralized reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributedOutcome {
    pub broadcast: Broadcast,
    pub per_node: Vec<LocalBlocks>,
    pub centralized: Vec<LocalBlocks>,
    pub matches_centralized: bool,
    pub forward_messages: usize,
    pub broadcast_deliveries: usize,
    pub non_local_reads: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

/// The same per-hop quantities computed with global knowledge through the
/// `allocation` module.
pub fn centralized_blocks(
    channels: &[HopChannel],
    rates: &[f64],
    total_q: u64,
) -> Result<Vec<LocalBlocks>> {
    let mut e_rc = Vec::with_capacity(channels.len());
    let mut e_sp = Vec::with_capacity(channels.len());
    for (n, (ch, &r)) in channels.iter().zip(rates).enumerate() {
        e_rc.push(random_coding_exponent(r, ch).map_err(|e| e.at_hop(n))?.exponent);
        e_sp.push(sphere_packing_exponent(r, ch).map_err(|e| e.at_hop(n))?.exponent);
    }
    let info = information_continuous_blocks(rates, total_q)?;
    let rc = reliability_optimal_blocks(&e_rc, total_q)?;
    let sp = reliability_optimal_blocks(&e_sp, total_q)?;
    Ok((0..channels.len())
        .map(|n| LocalBlocks {
            hop: n,
            rate: rates[n],
            info_continuous_real: info.real_blocks[n],
            info_continuous: info.floors[n],
            reliability_rc_real: rc.real_blocks[n],
            reliability_rc: rc.floors[n],
            reliability_sp_real: sp.real_blocks[n],
            reliability_sp: sp.floors[n],
        })
        .collect())
}

/// Runs forward pass, broadcast and local derivation, and compares the
/// outcome with the centralized computation.
pub fn run(channels: Vec<HopChannel>, rates: &[f64], total_q: u64) -> Result<DistributedOutcome> {
    let centralized = centralized_blocks(&channels, rates, total_q)?;
    let mut sim = Simulation::new(channels, rates)?;
    let msg = sim.forward_pass()?;
    let broadcast = sim.compute_and_broadcast(&msg, total_q);
    let per_node = sim.derive_all()?;
    let matches_centralized = per_node.len() == centralized.len()
        && per_node.iter().zip(&centralized).all(|(a, b)| a.bit_eq(b));
    Ok(DistributedOutcome {
        broadcast,
        per_node,
        centralized,
        matches_centralized,
        forward_messages: sim.forward_messages(),
        broadcast_deliveries: sim.broadcast_deliveries(),
        non_local_reads: sim.access_log().non_local_reads(),
        trace: sim.trace().to_vec(),
    })
}
