use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::conv::conv_encode;
use super::viterbi::{DecisionMode, ViterbiDecoder};
use super::FecError;
use crate::bits::Bits;
use crate::fading::BlockGains;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    Bpsk,
    Qpsk,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
        }
    }
}

/// One packet format: information length, constellation, and whether the
/// convolutional code is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PacketSpec {
    pub info_bits: usize,
    pub modulation: Modulation,
    pub coded: bool,
}

impl PacketSpec {
    pub fn new(info_bits: usize, modulation: Modulation, coded: bool) -> Self {
        Self {
            info_bits,
            modulation,
            coded,
        }
    }
}

/// Formats as `coded-bpsk-240` / `uncoded-qpsk-480`.
impl fmt::Display for PacketSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = if self.coded { "coded" } else { "uncoded" };
        let m = match self.modulation {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
        };
        write!(f, "{c}-{m}-{}", self.info_bits)
    }
}

impl FromStr for PacketSpec {
    type Err = FecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FecError::Scheme(s.to_string());
        let mut it = s.trim().split('-');
        let coded = match it.next() {
            Some("coded") => true,
            Some("uncoded") => false,
            _ => return Err(bad()),
        };
        let modulation = match it.next() {
            Some("bpsk") => Modulation::Bpsk,
            Some("qpsk") => Modulation::Qpsk,
            _ => return Err(bad()),
        };
        let info_bits: usize = it.next().and_then(|n| n.parse().ok()).ok_or_else(bad)?;
        if it.next().is_some() || info_bits == 0 {
            return Err(bad());
        }
        Ok(Self::new(info_bits, modulation, coded))
    }
}

/// Where the Genie spends its symbol-correction budget on Eve's packet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenieMode {
    /// After decoding: Eve succeeds if at most `budget` modulation symbols of
    /// the decoded information are wrong.
    #[default]
    PostDecoding,
    /// Before decoding: the `budget` most confidently wrong channel symbols
    /// are replaced by their noiseless values, then Eve must decode exactly.
    PreDecoding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub genie_budget: usize,
    pub genie_mode: GenieMode,
    pub decision: DecisionMode,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            genie_budget: 50,
            genie_mode: GenieMode::PostDecoding,
            decision: DecisionMode::Soft,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub bob_ok: bool,
    pub eve_ok: bool,
    /// Modulation symbols of Eve's decoded information still in error.
    pub eve_residual_symbol_errors: usize,
}

/// Precomputed pieces shared by every packet of one scheme.
#[derive(Debug, Clone)]
pub struct Link {
    packet: PacketSpec,
    config: LinkConfig,
    decoder: Option<ViterbiDecoder>,
}

impl Link {
    pub fn new(
        packet: PacketSpec,
        code: &super::ConvCodeSpec,
        config: LinkConfig,
    ) -> Result<Self, FecError> {
        if packet.info_bits == 0 {
            return Err(FecError::Scheme(packet.to_string()));
        }
        let decoder = if packet.coded {
            Some(ViterbiDecoder::new(code.clone(), config.decision)?)
        } else {
            None
        };
        Ok(Self {
            packet,
            config,
            decoder,
        })
    }

    pub fn packet(&self) -> PacketSpec {
        self.packet
    }

    /// Transmitted bits per information bit after coding and modulation.
    pub fn effective_rate(&self) -> f64 {
        let bps = self.packet.modulation.bits_per_symbol() as f64;
        self.decoder.as_ref().map_or(bps, |d| d.spec().rate() * bps)
    }

    /// Sends one random packet over both block-fading links at transmit
    /// power `power`. Draw order: information bits, Bob's noise, Eve's noise.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        gains: BlockGains,
        power: f64,
        rng: &mut R,
    ) -> LinkOutcome {
        let info = Bits::random(self.packet.info_bits, rng);
        let tx = match &self.decoder {
            Some(d) => conv_encode(d.spec(), info.as_slice()).expect("validated code"),
            None => info.as_slice().to_vec(),
        };
        let bps = self.packet.modulation.bits_per_symbol();
        let symbols = tx.len().div_ceil(bps);
        let bob = self.receive(&tx, symbols, gains.h_b, power, rng);
        let eve = self.receive(&tx, symbols, gains.h_e, power, rng);

        let bob_ok = self.decode(&bob.llr) == info.as_slice();

        let eve_llr = match self.config.genie_mode {
            GenieMode::PostDecoding => eve.llr,
            GenieMode::PreDecoding => self.genie_pre(&tx, eve, bps),
        };
        let eve_bits = self.decode(&eve_llr);
        let residual = symbol_errors(&eve_bits, info.as_slice(), bps);
        let eve_ok = match self.config.genie_mode {
            GenieMode::PostDecoding => residual <= self.config.genie_budget,
            GenieMode::PreDecoding => residual == 0,
        };
        LinkOutcome {
            bob_ok,
            eve_ok,
            eve_residual_symbol_errors: residual,
        }
    }

    /// Per-bit LLRs after coherent matched filtering. Each modulation
    /// symbol carries unit energy; complex noise has unit variance.
    fn receive<R: Rng + ?Sized>(
        &self,
        tx: &[u8],
        symbols: usize,
        h: f64,
        power: f64,
        rng: &mut R,
    ) -> Received {
        let bps = self.packet.modulation.bits_per_symbol();
        // Per-dimension amplitude; each real noise component has variance 1/2.
        let amp = (h * power).sqrt() * if bps == 2 { FRAC_1_SQRT_2 } else { 1.0 };
        let mut llr = Vec::with_capacity(symbols * bps);
        for s in 0..symbols {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let noise = [re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2];
            for (d, n) in noise.iter().enumerate().take(bps) {
                let bit = tx.get(s * bps + d).copied().unwrap_or(0);
                let r = amp * (1.0 - 2.0 * f64::from(bit)) + n;
                llr.push(4.0 * amp * r);
            }
        }
        llr.truncate(tx.len());
        Received { llr, amp }
    }

    fn genie_pre(&self, tx: &[u8], rx: Received, bps: usize) -> Vec<f64> {
        let Received { mut llr, amp } = rx;
        let clean = |b: u8| 4.0 * amp * amp * (1.0 - 2.0 * f64::from(b));
        // Symbols with at least one wrong hard decision, by total wrong-side magnitude.
        let mut wrong: Vec<(usize, f64)> = llr
            .chunks(bps)
            .enumerate()
            .filter_map(|(s, c)| {
                let mag: f64 = c
                    .iter()
                    .enumerate()
                    .filter(|&(d, &l)| wrong_side(l, tx[s * bps + d]))
                    .map(|(_, l)| l.abs())
                    .sum();
                let any = c
                    .iter()
                    .enumerate()
                    .any(|(d, &l)| wrong_side(l, tx[s * bps + d]));
                any.then_some((s, mag))
            })
            .collect();
        wrong.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(s, _) in wrong.iter().take(self.config.genie_budget) {
            let end = ((s + 1) * bps).min(llr.len());
            for (i, slot) in llr[s * bps..end].iter_mut().enumerate() {
                *slot = clean(tx[s * bps + i]);
            }
        }
        llr
    }

    fn decode(&self, llr: &[f64]) -> Vec<u8> {
        match &self.decoder {
            Some(d) => d
                .decode(llr, self.packet.info_bits)
                .expect("length by construction"),
            None => llr.iter().map(|&l| u8::from(l <= 0.0)).collect(),
        }
    }
}

struct Received {
    llr: Vec<f64>,
    amp: f64,
}

/// A zero LLR carries no information and counts as an error.
fn wrong_side(llr: f64, bit: u8) -> bool {
    if bit == 0 {
        llr <= 0.0
    } else {
        llr >= 0.0
    }
}

/// Number of `bps`-bit groups that differ.
pub fn symbol_errors(a: &[u8], b: &[u8], bps: usize) -> usize {
    a.chunks(bps)
        .zip(b.chunks(bps))
        .filter(|(x, y)| x != y)
        .count()
}

/// One packet over both links with a fresh decoder. Prefer [`Link`] in loops.
pub fn simulate_link<R: Rng + ?Sized>(
    packet: PacketSpec,
    code: &super::ConvCodeSpec,
    config: LinkConfig,
    gains: BlockGains,
    power: f64,
    rng: &mut R,
) -> Result<LinkOutcome, FecError> {
    Ok(Link::new(packet, code, config)?.simulate(gains, power, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::ConvCodeSpec;
    use crate::rng::stream;

    fn count(link: &Link, h: f64, power: f64, n: u64, seed: u64) -> (u64, u64) {
        (0..n).fold((0, 0), |(b, e), i| {
            let o = link.simulate(BlockGains { h_b: h, h_e: h }, power, &mut stream(seed, i));
            (b + u64::from(o.bob_ok), e + u64::from(o.eve_ok))
        })
    }

    #[test]
    fn scheme_names_roundtrip() {
        for s in ["coded-bpsk-240", "uncoded-qpsk-480", "coded-qpsk-120"] {
            assert_eq!(s.parse::<PacketSpec>().unwrap().to_string(), s);
        }
        for s in [
            "coded-8psk-240",
            "coded-bpsk",
            "coded-bpsk-0",
            "x-bpsk-1",
            "coded-bpsk-2-3",
        ] {
            assert!(s.parse::<PacketSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn strong_link_always_decodes_dead_link_never() {
        let code = ConvCodeSpec::k7();
        for m in [Modulation::Bpsk, Modulation::Qpsk] {
            for coded in [true, false] {
                let link = Link::new(PacketSpec::new(240, m, coded), &code, LinkConfig::default())
                    .unwrap();
                assert_eq!(count(&link, 1.0, 1e3, 200, 1).0, 200, "{m:?} {coded}");
                assert_eq!(count(&link, 0.0, 1e3, 200, 2).0, 0, "{m:?} {coded}");
            }
        }
    }

    #[test]
    fn coding_beats_uncoded_at_moderate_snr() {
        let code = ConvCodeSpec::k7();
        let cfg = LinkConfig::default();
        let coded = Link::new(PacketSpec::new(240, Modulation::Bpsk, true), &code, cfg).unwrap();
        let plain = Link::new(PacketSpec::new(240, Modulation::Bpsk, false), &code, cfg).unwrap();
        let (c, _) = count(&coded, 1.0, 2.0, 500, 3);
        let (u, _) = count(&plain, 1.0, 2.0, 500, 3);
        assert!(c > u, "coded {c} vs uncoded {u}");
    }

    #[test]
    fn bob_success_grows_with_snr_and_shrinks_with_length() {
        let code = ConvCodeSpec::k7();
        let cfg = LinkConfig::default();
        let short = Link::new(PacketSpec::new(240, Modulation::Bpsk, true), &code, cfg).unwrap();
        let long = Link::new(PacketSpec::new(480, Modulation::Bpsk, true), &code, cfg).unwrap();
        let lo = count(&short, 1.0, 10f64.powf(0.1), 1000, 4).0;
        let hi = count(&short, 1.0, 10f64.powf(0.3), 1000, 4).0;
        assert!(hi > lo, "{lo} {hi}");
        let l = count(&long, 1.0, 10f64.powf(0.2), 1000, 5).0;
        let s = count(&short, 1.0, 10f64.powf(0.2), 1000, 5).0;
        assert!(s >= l, "{s} {l}");
    }

    #[test]
    fn genie_budget_is_monotone_on_common_noise() {
        let code = ConvCodeSpec::k7();
        let pkt = PacketSpec::new(240, Modulation::Qpsk, true);
        for mode in [GenieMode::PostDecoding, GenieMode::PreDecoding] {
            let mut prev = 0;
            for budget in [0usize, 5, 20, 50, 120] {
                let cfg = LinkConfig {
                    genie_budget: budget,
                    genie_mode: mode,
                    ..Default::default()
                };
                let link = Link::new(pkt, &code, cfg).unwrap();
                let mut ok = 0;
                for i in 0..300u64 {
                    let o =
                        link.simulate(BlockGains { h_b: 1.0, h_e: 1.0 }, 1.0, &mut stream(6, i));
                    ok += u64::from(o.eve_ok);
                }
                assert!(ok >= prev, "{mode:?} budget {budget}: {ok} < {prev}");
                prev = ok;
            }
        }
    }

    #[test]
    fn genie_is_inactive_at_zero_budget() {
        let code = ConvCodeSpec::k7();
        let pkt = PacketSpec::new(240, Modulation::Bpsk, true);
        let post = Link::new(
            pkt,
            &code,
            LinkConfig {
                genie_budget: 0,
                ..Default::default()
            },
        )
        .unwrap();
        let pre = Link::new(
            pkt,
            &code,
            LinkConfig {
                genie_budget: 0,
                genie_mode: GenieMode::PreDecoding,
                ..Default::default()
            },
        )
        .unwrap();
        for i in 0..200u64 {
            let g = BlockGains { h_b: 1.5, h_e: 1.5 };
            let a = post.simulate(g, 1.5, &mut stream(7, i));
            let b = pre.simulate(g, 1.5, &mut stream(7, i));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_empty_packets() {
        let r = Link::new(
            PacketSpec::new(0, Modulation::Bpsk, false),
            &ConvCodeSpec::k7(),
            LinkConfig::default(),
        );
        assert!(r.is_err());
    }
}
