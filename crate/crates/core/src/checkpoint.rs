//! Binary checkpoint container.
//!
//! Layout: the ASCII line `advdialog-ckpt v1\n`, a little-endian `u32` entry
//! count, then named entries. Numbers are little-endian; parameter blocks are
//! row-major `f64`, so a save/load round trip is bit-exact.

use std::path::Path;

use crate::a2c::{Actor, Critic};
use crate::adversarial::{DemoBuffer, DemoEpisode, Discriminator, GanCritic};
use crate::domain::StateVector;
use crate::error::{Error, Result};
use crate::nn::{DenseNet, NetShape, RmsProp, RmsPropConfig};
use crate::trainer::Learner;

pub const CKPT_HEADER: &str = "advdialog-ckpt v1";

const KIND_NET: u8 = 1;
const KIND_DEMOS: u8 = 2;
const KIND_TEXT: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Net { net: DenseNet, opt: Option<RmsProp> },
    Demos(DemoBuffer),
    Text(String),
}

/// Ordered list of named entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    entries: Vec<(String, Entry)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(String, Entry)] {
        &self.entries
    }

    /// Adds or replaces an entry.
    pub fn insert(&mut self, name: &str, entry: Entry) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = entry,
            None => self.entries.push((name.to_string(), entry)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn insert_net(&mut self, name: &str, net: &DenseNet, opt: Option<&RmsProp>) {
        self.insert(
            name,
            Entry::Net {
                net: net.clone(),
                opt: opt.cloned(),
            },
        );
    }

    pub fn net(&self, name: &str) -> Result<(DenseNet, Option<RmsProp>)> {
        match self.get(name) {
            Some(Entry::Net { net, opt }) => Ok((net.clone(), opt.clone())),
            Some(_) => Err(Error::Checkpoint(format!("entry `{name}` is not a network"))),
            None => Err(Error::Checkpoint(format!("missing network `{name}`"))),
        }
    }

    pub fn demos(&self, name: &str) -> Result<&DemoBuffer> {
        match self.get(name) {
            Some(Entry::Demos(d)) => Ok(d),
            Some(_) => Err(Error::Checkpoint(format!(
                "entry `{name}` is not a demonstration buffer"
            ))),
            None => Err(Error::Checkpoint(format!("missing demonstrations `{name}`"))),
        }
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        match self.get(name) {
            Some(Entry::Text(t)) => Some(t),
            _ => None,
        }
    }

    /// Stores all four networks of a learner with their optimizer states.
    pub fn insert_learner(&mut self, learner: &Learner) {
        self.insert_net("actor", &learner.actor.net, Some(&learner.actor.opt));
        self.insert_net("critic", &learner.critic.net, Some(&learner.critic.opt));
        self.insert_net(
            "gan_critic",
            &learner.gan_critic.inner.net,
            Some(&learner.gan_critic.inner.opt),
        );
        self.insert_net("discriminator", &learner.disc.net, Some(&learner.disc.opt));
    }

    pub fn actor(&self) -> Result<Actor> {
        let (net, opt) = self.net("actor")?;
        Ok(match opt {
            Some(opt) => Actor { net, opt },
            None => Actor::from_net(net, RmsPropConfig::new(0.0)),
        })
    }

    pub fn learner(&self, n_actions: usize, clamp: f64) -> Result<Learner> {
        let restore = |name: &str| -> Result<(DenseNet, RmsProp)> {
            let (net, opt) = self.net(name)?;
            let opt = opt.ok_or_else(|| Error::Checkpoint(format!("`{name}` has no optimizer state")))?;
            Ok((net, opt))
        };
        let (net, opt) = restore("critic")?;
        let critic = Critic { net, opt };
        let (net, opt) = restore("gan_critic")?;
        let gan_critic = GanCritic::new(Critic { net, opt });
        let (net, opt) = restore("discriminator")?;
        let mut disc = Discriminator::from_net(net, n_actions, opt.config, clamp);
        disc.opt = opt;
        Ok(Learner {
            actor: self.actor()?,
            critic,
            gan_critic,
            disc,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.0.extend_from_slice(CKPT_HEADER.as_bytes());
        w.0.push(b'\n');
        w.u32(self.entries.len() as u32);
        for (name, entry) in &self.entries {
            w.str(name);
            match entry {
                Entry::Net { net, opt } => {
                    w.0.push(KIND_NET);
                    let s = net.shape();
                    w.u64(s.input as u64);
                    w.u64(s.hidden as u64);
                    w.u64(s.output as u64);
                    w.f64s(net.params());
                    match opt {
                        Some(o) => {
                            w.0.push(1);
                            w.f64(o.config.lr);
                            w.f64(o.config.decay);
                            w.f64(o.config.eps);
                            w.f64s(o.accumulators());
                        }
                        None => w.0.push(0),
                    }
                }
                Entry::Demos(d) => {
                    w.0.push(KIND_DEMOS);
                    w.u64(d.episodes().len() as u64);
                    for ep in d.episodes() {
                        w.u64(ep.goal_index as u64);
                        w.u64(ep.seed);
                        w.u64(ep.pairs.len() as u64);
                        for (s, a) in &ep.pairs {
                            w.u64(*a as u64);
                            w.f64s(s);
                        }
                    }
                }
                Entry::Text(t) => {
                    w.0.push(KIND_TEXT);
                    w.str(t);
                }
            }
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let head = CKPT_HEADER.len() + 1;
        if bytes.len() < head || &bytes[..head - 1] != CKPT_HEADER.as_bytes() || bytes[head - 1] != b'\n' {
            return Err(Error::Checkpoint(format!("missing `{CKPT_HEADER}` header")));
        }
        let mut r = Reader { buf: bytes, pos: head };
        let n = r.u32()?;
        let mut ckpt = Checkpoint::new();
        for _ in 0..n {
            let name = r.str()?;
            let entry = match r.u8()? {
                KIND_NET => {
                    let shape = NetShape::new(r.usize()?, r.usize()?, r.usize()?);
                    let params = r.f64s()?;
                    let net = DenseNet::from_params(shape, params)
                        .map_err(|e| Error::Checkpoint(format!("network `{name}`: {e}")))?;
                    let opt = match r.u8()? {
                        0 => None,
                        1 => {
                            let config = RmsPropConfig {
                                lr: r.f64()?,
                                decay: r.f64()?,
                                eps: r.f64()?,
                            };
                            let acc = r.f64s()?;
                            if acc.len() != net.params().len() {
                                return Err(Error::Checkpoint(format!("`{name}` optimizer size mismatch")));
                            }
                            Some(RmsProp::from_accumulators(config, acc))
                        }
                        f => return Err(Error::Checkpoint(format!("bad optimizer flag {f}"))),
                    };
                    Entry::Net { net, opt }
                }
                KIND_DEMOS => {
                    let n_eps = r.usize()?;
                    let mut episodes = Vec::new();
                    for _ in 0..n_eps {
                        let goal_index = r.usize()?;
                        let seed = r.u64()?;
                        let n_pairs = r.usize()?;
                        let mut pairs = Vec::new();
                        for _ in 0..n_pairs {
                            let a = r.usize()?;
                            pairs.push((StateVector(r.f64s()?), a));
                        }
                        episodes.push(DemoEpisode {
                            goal_index,
                            seed,
                            pairs,
                        });
                    }
                    Entry::Demos(DemoBuffer::new(episodes))
                }
                KIND_TEXT => Entry::Text(r.str()?),
                k => return Err(Error::Checkpoint(format!("unknown entry kind {k} for `{name}`"))),
            };
            ckpt.entries.push((name, entry));
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn f64(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn f64s(&mut self, xs: &[f64]) {
        self.u64(xs.len() as u64);
        xs.iter().for_each(|&x| self.f64(x));
    }
    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("size overflow".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        if n > (self.buf.len() - self.pos) / 8 {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn str(&mut self) -> Result<String> {
        let n = self.usize()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Checkpoint("invalid utf-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::init(NetShape::new(4, 3, 2), &mut rng);
        let mut opt = RmsProp::new(RmsPropConfig::new(0.005), net.params().len());
        let mut n2 = net.clone();
        opt.step(n2.params_mut(), &vec![0.25; net.params().len()]).unwrap();
        let mut c = Checkpoint::new();
        c.insert_net("actor", &n2, Some(&opt));
        c.insert_net("bare", &net, None);
        c.insert(
            "demos",
            Entry::Demos(DemoBuffer::new(vec![DemoEpisode {
                goal_index: 3,
                seed: u64::MAX,
                pairs: vec![(StateVector(vec![0.1, -0.0, 1e-300]), 5)],
            }])),
        );
        c.insert("meta", Entry::Text("agent=a2c".into()));
        c
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = c.to_bytes();
        assert!(bytes.starts_with(b"advdialog-ckpt v1\n"));
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        let (a, _) = c.net("actor").unwrap();
        let (b, _) = back.net("actor").unwrap();
        assert!(a
            .params()
            .iter()
            .zip(b.params())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(back.text("meta"), Some("agent=a2c"));
        assert_eq!(back.demos("demos").unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Checkpoint::from_bytes(b"nope").is_err());
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
        assert!(sample().net("missing").is_err());
        assert!(sample().net("meta").is_err());
    }
}
