//! Versioned little-endian network snapshot.
//!
//! Layout: magic `DPSNNET\0`, version `u32`, the grid spec (dimensions as
//! `u32`, reals as `f64`, seed as `u64`, model tag `u8` followed by nine
//! `f64` LIF parameters when the tag is 1), neuron count `u32`, per-neuron
//! fanout `u32`, then every synapse as `target u32, weight f64, delay u16`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridSpec, ModelFamily, Network, Synapse};
use crate::error::{Error, Result};
use crate::neuron::AdaptiveLifParams;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"DPSNNET\0";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(net: &Network, mut w: W) -> io::Result<()> {
    let s = net.spec();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    for v in [s.grid_x, s.grid_y, s.neurons_per_column] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in [
        s.exc_fraction,
        s.target_fanout,
        s.decay_lambda,
        s.delay_min,
        s.delay_max,
        s.dt,
        s.w_exc,
        s.w_inh,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&s.seed.to_le_bytes())?;
    match &s.model {
        ModelFamily::Izhikevich => w.write_all(&[0])?,
        ModelFamily::AdaptiveLif(p) => {
            w.write_all(&[1])?;
            for v in [
                p.tau_m, p.v_rest, p.v_thresh, p.v_reset, p.t_refr, p.g_c, p.tau_c, p.delta_c, p.e_k,
            ] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    let n = net.neuron_count() as u32;
    w.write_all(&n.to_le_bytes())?;
    for i in 0..n {
        w.write_all(&(net.fanout(i) as u32).to_le_bytes())?;
    }
    for syn in &net.synapses {
        w.write_all(&syn.target.to_le_bytes())?;
        w.write_all(&syn.weight.to_le_bytes())?;
        w.write_all(&syn.delay_steps.to_le_bytes())?;
    }
    w.flush()
}

struct Le<R>(R);

impl<R: Read> Le<R> {
    fn bytes<const N: usize>(&mut self) -> io::Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b)?;
        Ok(b)
    }
    fn u16(&mut self) -> io::Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> io::Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> io::Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> io::Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Io(io::Error::new(io::ErrorKind::InvalidData, msg.into()))
}

pub fn read_snapshot<R: Read>(r: R) -> Result<Network> {
    let mut r = Le(r);
    let magic: [u8; 8] = r.bytes()?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(corrupt("not a network snapshot"));
    }
    let version = r.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(corrupt(format!("unsupported snapshot version {version}")));
    }
    let (grid_x, grid_y, neurons_per_column) = (r.u32()?, r.u32()?, r.u32()?);
    let mut reals = [0f64; 8];
    for v in reals.iter_mut() {
        *v = r.f64()?;
    }
    let seed = r.u64()?;
    let model = match r.bytes::<1>()?[0] {
        0 => ModelFamily::Izhikevich,
        1 => {
            let mut p = [0f64; 9];
            for v in p.iter_mut() {
                *v = r.f64()?;
            }
            ModelFamily::AdaptiveLif(AdaptiveLifParams {
                tau_m: p[0],
                v_rest: p[1],
                v_thresh: p[2],
                v_reset: p[3],
                t_refr: p[4],
                g_c: p[5],
                tau_c: p[6],
                delta_c: p[7],
                e_k: p[8],
            })
        }
        tag => return Err(corrupt(format!("unknown model tag {tag}"))),
    };
    let spec = GridSpec {
        grid_x,
        grid_y,
        neurons_per_column,
        exc_fraction: reals[0],
        target_fanout: reals[1],
        decay_lambda: reals[2],
        delay_min: reals[3],
        delay_max: reals[4],
        dt: reals[5],
        w_exc: reals[6],
        w_inh: reals[7],
        model,
        seed,
    };
    spec.validate()?;
    let n = r.u32()? as usize;
    if n != spec.total_neurons() {
        return Err(corrupt(format!(
            "snapshot holds {n} neurons, spec implies {}",
            spec.total_neurons()
        )));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    for _ in 0..n {
        let next = offsets[offsets.len() - 1] + r.u32()? as usize;
        offsets.push(next);
    }
    let total = offsets[n];
    let mut synapses = Vec::with_capacity(total);
    for _ in 0..total {
        let target = r.u32()?;
        if target as usize >= n {
            return Err(corrupt(format!("synapse target {target} out of range")));
        }
        synapses.push(Synapse {
            target,
            weight: r.f64()?,
            delay_steps: r.u16()?,
        });
    }
    Ok(Network::from_parts(spec, offsets, synapses))
}

pub fn save_snapshot(net: &Network, path: &Path) -> Result<()> {
    write_snapshot(net, BufWriter::new(File::create(path)?))?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<Network> {
    read_snapshot(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_network;

    #[test]
    fn snapshot_round_trip() {
        for model in [ModelFamily::Izhikevich, ModelFamily::AdaptiveLif(AdaptiveLifParams::default())] {
            let spec = GridSpec {
                grid_x: 3,
                grid_y: 2,
                neurons_per_column: 20,
                target_fanout: 30.0,
                model,
                ..GridSpec::default()
            };
            let net = build_network(&spec).unwrap();
            let mut buf = Vec::new();
            write_snapshot(&net, &mut buf).unwrap();
            assert_eq!(&buf[..8], SNAPSHOT_MAGIC);
            assert_eq!(read_snapshot(&buf[..]).unwrap(), net);
        }
    }

    #[test]
    fn snapshot_rejects_damage() {
        let spec = GridSpec {
            grid_x: 2,
            grid_y: 2,
            neurons_per_column: 10,
            target_fanout: 10.0,
            ..GridSpec::default()
        };
        let net = build_network(&spec).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&net, &mut buf).unwrap();
        assert!(read_snapshot(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_snapshot(&bad[..]).is_err());
        let mut bad = buf;
        bad[8] = 9;
        assert!(read_snapshot(&bad[..]).is_err());
    }
}
