//! Binary checkpoint format.
//!
//! Layout (little-endian): magic `LCPPOCKP`, format version `u32`, iteration
//! `u64`, actor network, critic network, actor Adam state, critic Adam state,
//! then a SHA-256 digest of every preceding byte.
//!
//! A network is `activation: u8, n_sizes: u32, sizes: u32 × n_sizes,
//! n_params: u64, params: f64 × n_params`. An Adam state is
//! `beta1, beta2, epsilon: f64, step: u64, n: u64, m: f64 × n, v: f64 × n`.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::adam::Adam;
use super::net::{param_count, Activation, ActorCritic, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LCPPOCKP";
const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;
const MAX_LAYERS: usize = 64;

/// Everything needed to restore a learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Number of completed training iterations.
    pub iteration: usize,
    pub net: ActorCritic,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.iteration as u64).to_le_bytes());
        write_net(&mut out, &self.net.actor);
        write_net(&mut out, &self.net.critic);
        write_adam(&mut out, &self.actor_opt);
        write_adam(&mut out, &self.critic_opt);
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + DIGEST_LEN || &bytes[..MAGIC.len()] != MAGIC {
            return Err(corrupt("magic", "not a checkpoint file"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(corrupt("checksum", "content does not match its digest"));
        }
        let mut r = Reader {
            bytes: body,
            pos: MAGIC.len(),
        };
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(corrupt(
                "version",
                &format!("unsupported version {version}"),
            ));
        }
        let iteration = r.u64("iteration")? as usize;
        let actor = read_net(&mut r, "actor")?;
        let critic = read_net(&mut r, "critic")?;
        let net = ActorCritic::from_nets(actor, critic)
            .map_err(|e| corrupt("critic.sizes", &e.to_string()))?;
        let actor_opt = read_adam(&mut r, "actor_adam", net.actor.params().len())?;
        let critic_opt = read_adam(&mut r, "critic_adam", net.critic.params().len())?;
        if r.pos != body.len() {
            return Err(corrupt(
                "trailer",
                "unexpected bytes after the optimiser state",
            ));
        }
        Ok(Self {
            iteration,
            net,
            actor_opt,
            critic_opt,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn corrupt(field: &str, detail: &str) -> Error {
    Error::Checkpoint {
        field: field.to_string(),
        detail: detail.to_string(),
    }
}

fn write_net(out: &mut Vec<u8>, net: &Mlp) {
    out.push(net.activation().tag());
    out.extend_from_slice(&(net.sizes().len() as u32).to_le_bytes());
    for s in net.sizes() {
        out.extend_from_slice(&(*s as u32).to_le_bytes());
    }
    write_f64s(out, net.params());
}

fn write_adam(out: &mut Vec<u8>, adam: &Adam) {
    for x in [adam.beta1, adam.beta2, adam.epsilon] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&adam.step.to_le_bytes());
    write_f64s(out, &adam.m);
    write_f64s(out, &adam.v);
}

fn write_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    out.extend_from_slice(&(xs.len() as u64).to_le_bytes());
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, field: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(corrupt(field, "truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, field: &str) -> Result<u8> {
        Ok(self.take(1, field)?[0])
    }

    fn u32(&mut self, field: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4, field)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self, field: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8, field)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self, field: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8, field)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64s(&mut self, n: usize, field: &str) -> Result<Vec<f64>> {
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| corrupt(field, "length overflow"))?,
            field,
        )?;
        let xs: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(corrupt(field, "non-finite value"));
        }
        Ok(xs)
    }
}

fn read_net(r: &mut Reader<'_>, name: &str) -> Result<Mlp> {
    let f = |s: &str| format!("{name}.{s}");
    let activation = Activation::from_tag(r.u8(&f("activation"))?)
        .ok_or_else(|| corrupt(&f("activation"), "unknown activation tag"))?;
    let n_sizes = r.u32(&f("sizes"))? as usize;
    if !(2..=MAX_LAYERS).contains(&n_sizes) {
        return Err(corrupt(&f("sizes"), &format!("{n_sizes} layer sizes")));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        sizes.push(r.u32(&f("sizes"))? as usize);
    }
    if sizes.contains(&0) {
        return Err(corrupt(&f("sizes"), "zero-width layer"));
    }
    let n_params = r.u64(&f("params"))? as usize;
    if n_params != param_count(&sizes) {
        return Err(corrupt(
            &f("params"),
            "parameter count does not match layer sizes",
        ));
    }
    let params = r.f64s(n_params, &f("params"))?;
    Mlp::from_params(sizes, activation, params).map_err(|e| corrupt(&f("params"), &e.to_string()))
}

fn read_adam(r: &mut Reader<'_>, name: &str, n_params: usize) -> Result<Adam> {
    let f = |s: &str| format!("{name}.{s}");
    let mut adam = Adam::new(n_params);
    adam.beta1 = r.f64(&f("beta1"))?;
    adam.beta2 = r.f64(&f("beta2"))?;
    adam.epsilon = r.f64(&f("epsilon"))?;
    adam.step = r.u64(&f("step"))?;
    for (field, dst) in [("m", &mut adam.m), ("v", &mut adam.v)] {
        let n = r.u64(&f(field))? as usize;
        if n != n_params {
            return Err(corrupt(&f(field), "length does not match the network"));
        }
        *dst = r.f64s(n, &f(field))?;
    }
    Ok(adam)
}
