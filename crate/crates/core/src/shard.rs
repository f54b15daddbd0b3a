//! Shard files: a byte stream cut into stripes, one file per node plus a
//! manifest.
//!
//! Data bytes fill each stripe's `k x m` data grid column by column, so every
//! stripe column is one base-code codeword. Node `v` stores its `m`-symbol
//! row of every stripe, in stripe order, after a fixed 31-byte header:
//!
//! ```text
//! magic "PBKC" | version u8 | variant u8 | n u16 | k u16 | m u16 | L u16
//! | s u16 | theta u8 | node_index u16 | stripe_count u32 | payload_length u64
//! ```
//!
//! The manifest (`<stem>.pbkm`) repeats the parameter prefix and records the
//! original length and a CRC-32 of the content. All integers are big-endian.
//! Node indices in headers and file names are 1-based.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::code::{ArrayCode, CodeParams, CodeSpec, Decoder, Variant};
use crate::error::{Error, Result};
use crate::field::Gf256;
use crate::grid::{Cell, Grid};
use crate::repair::{CellSource, PlanExecutor};

pub const MAGIC: [u8; 4] = *b"PBKC";
pub const VERSION: u8 = 1;
pub const PREFIX_LEN: usize = 17;
pub const HEADER_LEN: usize = 31;
pub const MANIFEST_LEN: usize = 33;
pub const MANIFEST_EXT: &str = "pbkm";

/// Cuts `bytes` into `k x m` data grids, column-major, zero-padding the last.
pub fn stripe_split(bytes: &[u8], k: usize, m: usize) -> Vec<Grid> {
    let block = k * m;
    bytes
        .chunks(block)
        .map(|chunk| {
            let mut g = Grid::zeros(k, m);
            for (idx, &b) in chunk.iter().enumerate() {
                g.set(Cell::new(idx % k, idx / k), Gf256(b));
            }
            g
        })
        .collect()
}

/// Inverse of [`stripe_split`], truncated to `len` bytes.
pub fn stripe_join(stripes: &[Grid], len: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(stripes.iter().map(|g| g.rows() * g.cols()).sum());
    for g in stripes {
        for c in 0..g.cols() {
            for r in 0..g.rows() {
                out.push(g.get(Cell::new(r, c)).0);
            }
        }
    }
    out.truncate(len as usize);
    out
}

pub fn stripe_count(len: u64, k: usize, m: usize) -> u32 {
    len.div_ceil((k * m) as u64) as u32
}

fn put_prefix(out: &mut Vec<u8>, p: &CodeParams) {
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(p.variant as u8);
    for v in [p.n, p.k, p.m, p.l, p.s] {
        out.extend_from_slice(&(v as u16).to_be_bytes());
    }
    out.push(p.theta.0);
}

fn be16(b: &[u8]) -> usize {
    u16::from_be_bytes([b[0], b[1]]) as usize
}

fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes(b[..4].try_into().unwrap())
}

fn be64(b: &[u8]) -> u64 {
    u64::from_be_bytes(b[..8].try_into().unwrap())
}

fn parse_prefix(b: &[u8]) -> Result<CodeParams> {
    if b.len() < 4 || b[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if b.len() < PREFIX_LEN {
        return Err(Error::TruncatedPayload {
            expected: PREFIX_LEN as u64,
            found: b.len() as u64,
        });
    }
    if b[4] != VERSION {
        return Err(Error::VersionMismatch(b[4]));
    }
    let variant = Variant::from_u8(b[5]).map_err(|e| Error::HeaderSpecMismatch(e.to_string()))?;
    Ok(CodeParams {
        variant,
        n: be16(&b[6..]),
        k: be16(&b[8..]),
        m: be16(&b[10..]),
        l: be16(&b[12..]),
        s: be16(&b[14..]),
        theta: Gf256(b[16]),
    })
}

fn build_params(p: &CodeParams) -> Result<CodeSpec> {
    match p.variant {
        Variant::C1 if p.s != 0 || p.theta.0 != 0 => {
            Err(Error::HeaderSpecMismatch("C1 header with nonzero s or theta".into()))
        }
        _ => p.build().map_err(|e| Error::HeaderSpecMismatch(e.to_string())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShardHeader {
    pub params: CodeParams,
    /// 1-based.
    pub node_index: u16,
    pub stripe_count: u32,
    pub payload_length: u64,
}

impl ShardHeader {
    pub fn new(params: CodeParams, node: usize, stripe_count: u32) -> Self {
        ShardHeader {
            params,
            node_index: (node + 1) as u16,
            stripe_count,
            payload_length: stripe_count as u64 * params.m as u64,
        }
    }

    /// 0-based node.
    pub fn node(&self) -> usize {
        self.node_index as usize - 1
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN);
        put_prefix(&mut out, &self.params);
        out.extend_from_slice(&self.node_index.to_be_bytes());
        out.extend_from_slice(&self.stripe_count.to_be_bytes());
        out.extend_from_slice(&self.payload_length.to_be_bytes());
        out
    }

    /// Parses and checks a header: the parameters must build a code, the
    /// node index must be in range, and the payload length must match.
    pub fn parse(b: &[u8]) -> Result<Self> {
        let params = parse_prefix(b)?;
        if b.len() < HEADER_LEN {
            return Err(Error::TruncatedPayload {
                expected: HEADER_LEN as u64,
                found: b.len() as u64,
            });
        }
        build_params(&params)?;
        let node_index = be16(&b[17..]) as u16;
        if node_index == 0 || node_index as usize > params.n {
            return Err(Error::HeaderSpecMismatch(format!(
                "node index {node_index} outside 1..={}",
                params.n
            )));
        }
        let stripe_count = be32(&b[19..]);
        let payload_length = be64(&b[23..]);
        if payload_length != stripe_count as u64 * params.m as u64 {
            return Err(Error::HeaderSpecMismatch(format!(
                "payload length {payload_length} != {stripe_count} stripes x m = {}",
                params.m
            )));
        }
        Ok(ShardHeader {
            params,
            node_index,
            stripe_count,
            payload_length,
        })
    }
}

/// One node's stored rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shard {
    pub header: ShardHeader,
    pub payload: Vec<u8>,
}

impl Shard {
    pub fn row(&self, stripe: usize) -> &[u8] {
        let m = self.header.params.m;
        &self.payload[stripe * m..(stripe + 1) * m]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header.to_bytes();
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn parse(b: &[u8]) -> Result<Self> {
        let header = ShardHeader::parse(b)?;
        let body = &b[HEADER_LEN..];
        if (body.len() as u64) < header.payload_length {
            return Err(Error::TruncatedPayload {
                expected: header.payload_length,
                found: body.len() as u64,
            });
        }
        Ok(Shard {
            header,
            payload: body[..header.payload_length as usize].to_vec(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub params: CodeParams,
    pub stripe_count: u32,
    pub file_length: u64,
    pub crc32: u32,
}

impl Manifest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(MANIFEST_LEN);
        put_prefix(&mut out, &self.params);
        out.extend_from_slice(&self.stripe_count.to_be_bytes());
        out.extend_from_slice(&self.file_length.to_be_bytes());
        out.extend_from_slice(&self.crc32.to_be_bytes());
        out
    }

    pub fn parse(b: &[u8]) -> Result<Self> {
        let params = parse_prefix(b)?;
        if b.len() < MANIFEST_LEN {
            return Err(Error::TruncatedPayload {
                expected: MANIFEST_LEN as u64,
                found: b.len() as u64,
            });
        }
        build_params(&params)?;
        let manifest = Manifest {
            params,
            stripe_count: be32(&b[17..]),
            file_length: be64(&b[21..]),
            crc32: be32(&b[29..]),
        };
        if manifest.stripe_count != stripe_count(manifest.file_length, params.k, params.m) {
            return Err(Error::HeaderSpecMismatch("stripe count does not match file length".into()));
        }
        Ok(manifest)
    }

    fn accepts(&self, shard: &ShardHeader) -> bool {
        shard.params == self.params && shard.stripe_count == self.stripe_count
    }
}

/// Encodes `bytes` into one shard per node.
pub fn encode_bytes(code: &CodeSpec, bytes: &[u8]) -> Result<(Manifest, Vec<Shard>)> {
    let params = code.params();
    let stripes = stripe_split(bytes, code.k(), code.m());
    let count = stripes.len() as u32;
    let mut shards: Vec<Shard> = (0..code.n())
        .map(|v| Shard {
            header: ShardHeader::new(params, v, count),
            payload: Vec::with_capacity(stripes.len() * code.m()),
        })
        .collect();
    for data in &stripes {
        let stripe = code.encode(data)?;
        for (v, shard) in shards.iter_mut().enumerate() {
            shard.payload.extend(stripe.row(v).iter().map(|x| x.0));
        }
    }
    let manifest = Manifest {
        params,
        stripe_count: count,
        file_length: bytes.len() as u64,
        crc32: crc32fast::hash(bytes),
    };
    Ok((manifest, shards))
}

/// Rebuilds the content from exactly `k` shards and checks the CRC.
pub fn decode_shards(manifest: &Manifest, shards: &[&Shard]) -> Result<Vec<u8>> {
    let code = manifest.params.build()?;
    let k = code.k();
    if shards.len() < k {
        return Err(Error::InsufficientShards {
            needed: k,
            found: shards.len(),
        });
    }
    let used = &shards[..k];
    for s in used {
        if !manifest.accepts(&s.header) {
            return Err(Error::HeaderSpecMismatch(format!(
                "shard {} does not belong to this manifest",
                s.header.node_index
            )));
        }
    }
    let nodes: Vec<usize> = used.iter().map(|s| s.header.node()).collect();
    let decoder = Decoder::new(&code, &nodes)?;
    let mut grids = Vec::with_capacity(manifest.stripe_count as usize);
    for t in 0..manifest.stripe_count as usize {
        let rows: Vec<Vec<Gf256>> = used
            .iter()
            .map(|s| s.row(t).iter().copied().map(Gf256).collect())
            .collect();
        let refs: Vec<&[Gf256]> = rows.iter().map(|r| r.as_slice()).collect();
        grids.push(decoder.decode(&refs)?);
    }
    let out = stripe_join(&grids, manifest.file_length);
    let actual = crc32fast::hash(&out);
    if actual != manifest.crc32 {
        return Err(Error::ChecksumMismatch {
            expected: manifest.crc32,
            actual,
        });
    }
    Ok(out)
}

struct ShardCells<'a> {
    shards: &'a [Option<&'a Shard>],
    stripe: usize,
}

impl CellSource for ShardCells<'_> {
    fn cell(&self, cell: Cell) -> Option<Gf256> {
        let s = self.shards.get(cell.node).copied().flatten()?;
        s.row(self.stripe).get(cell.col).map(|&b| Gf256(b))
    }
}

/// Outcome of a repair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairReport {
    /// 0-based.
    pub failed: usize,
    pub symbols_per_stripe: usize,
    pub data_symbols_per_stripe: usize,
    pub helper_nodes: Vec<usize>,
    pub stripes: u32,
}

impl RepairReport {
    pub fn ratio(&self) -> f64 {
        self.symbols_per_stripe as f64 / self.data_symbols_per_stripe as f64
    }
}

/// Regenerates `failed`'s shard. `shards[v]` is node `v`'s shard, if
/// present; only the plan's helper nodes are consulted.
pub fn repair_shard(manifest: &Manifest, shards: &[Option<&Shard>], failed: usize) -> Result<(Shard, RepairReport)> {
    let code = manifest.params.build()?;
    let plan = code.plan_repair(failed)?;
    let helpers: Vec<usize> = plan.helper_nodes().into_iter().collect();
    let missing = helpers
        .iter()
        .filter(|&&h| !shards.get(h).copied().flatten().is_some_and(|s| manifest.accepts(&s.header)))
        .count();
    if missing > 0 {
        return Err(Error::InsufficientShards {
            needed: helpers.len(),
            found: helpers.len() - missing,
        });
    }
    let exec = PlanExecutor::new(&plan, code.base())?;
    let header = ShardHeader::new(manifest.params, failed, manifest.stripe_count);
    let mut payload = Vec::with_capacity(header.payload_length as usize);
    for t in 0..manifest.stripe_count as usize {
        let row = exec.run(&ShardCells { shards, stripe: t })?;
        payload.extend(row.iter().map(|x| x.0));
    }
    let report = RepairReport {
        failed,
        symbols_per_stripe: plan.bandwidth(),
        data_symbols_per_stripe: code.k() * code.m(),
        helper_nodes: helpers,
        stripes: manifest.stripe_count,
    };
    Ok((Shard { header, payload }, report))
}

pub fn manifest_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.{MANIFEST_EXT}"))
}

/// `node` is 0-based; the file name carries the 1-based index.
pub fn shard_path(dir: &Path, stem: &str, node: usize) -> PathBuf {
    dir.join(format!("{stem}.pbk{}", node + 1))
}

/// Writes to a temporary sibling, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_shard(path: &Path, shard: &Shard) -> Result<()> {
    write_atomic(path, &shard.to_bytes())
}

pub fn read_shard(path: &Path) -> Result<Shard> {
    Shard::parse(&fs::read(path)?)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    Manifest::parse(&fs::read(path)?)
}

/// Encodes `input` into `out_dir/<stem>.pbk1..n` and `out_dir/<stem>.pbkm`.
pub fn encode_file(code: &CodeSpec, input: &Path, out_dir: &Path, stem: &str) -> Result<Manifest> {
    let bytes = fs::read(input)?;
    let (manifest, shards) = encode_bytes(code, &bytes)?;
    fs::create_dir_all(out_dir)?;
    for (v, s) in shards.iter().enumerate() {
        write_shard(&shard_path(out_dir, stem, v), s)?;
    }
    write_atomic(&manifest_path(out_dir, stem), &manifest.to_bytes())?;
    Ok(manifest)
}

/// Decodes from the shards in `dir`. With `nodes`, exactly those (0-based)
/// nodes are used; otherwise the first `k` readable shards are.
pub fn decode_files(dir: &Path, stem: &str, nodes: Option<&[usize]>, output: &Path) -> Result<Vec<usize>> {
    let manifest = read_manifest(&manifest_path(dir, stem))?;
    let (n, k) = (manifest.params.n, manifest.params.k);
    let candidates: Vec<usize> = match nodes {
        Some(list) => list.to_vec(),
        None => (0..n).collect(),
    };
    let mut shards = Vec::with_capacity(k);
    for v in candidates {
        if shards.len() == k {
            break;
        }
        if v >= n {
            return Err(crate::error::param_err(format!("node {} outside 1..={n}", v + 1)));
        }
        match read_shard(&shard_path(dir, stem, v)) {
            Ok(s) if manifest.accepts(&s.header) && s.header.node() == v => shards.push(s),
            Ok(_) | Err(_) if nodes.is_none() => continue,
            Ok(_) => {
                return Err(Error::HeaderSpecMismatch(format!("shard {} does not match manifest", v + 1)))
            }
            Err(e) => return Err(e),
        }
    }
    if shards.len() < k {
        return Err(Error::InsufficientShards {
            needed: k,
            found: shards.len(),
        });
    }
    let refs: Vec<&Shard> = shards.iter().collect();
    let bytes = decode_shards(&manifest, &refs)?;
    write_atomic(output, &bytes)?;
    Ok(shards.iter().map(|s| s.header.node()).collect())
}

/// Rebuilds `dir/<stem>.pbk<failed+1>` from the helper shards of its plan.
pub fn repair_file(dir: &Path, stem: &str, failed: usize) -> Result<RepairReport> {
    let manifest = read_manifest(&manifest_path(dir, stem))?;
    let code = manifest.params.build()?;
    if failed >= code.n() {
        return Err(crate::error::param_err(format!("node {} outside 1..={}", failed + 1, code.n())));
    }
    let plan = code.plan_repair(failed)?;
    let mut loaded: Vec<Option<Shard>> = vec![None; code.n()];
    for h in plan.helper_nodes() {
        let s = read_shard(&shard_path(dir, stem, h)).map_err(|e| match e {
            Error::Io(_) => Error::InsufficientShards {
                needed: plan.helper_nodes().len(),
                found: 0,
            },
            other => other,
        })?;
        if s.header.node() != h {
            return Err(Error::HeaderSpecMismatch(format!("file for node {} holds node {}", h + 1, s.header.node_index)));
        }
        loaded[h] = Some(s);
    }
    let refs: Vec<Option<&Shard>> = loaded.iter().map(|s| s.as_ref()).collect();
    let (shard, report) = repair_shard(&manifest, &refs, failed)?;
    write_shard(&shard_path(dir, stem, failed), &shard)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c1() -> CodeSpec {
        CodeParams::c1(11, 6, 4, 2).build().unwrap()
    }

    #[test]
    fn split_layout_is_column_major() {
        assert!(stripe_split(&[], 6, 4).is_empty());
        let bytes: Vec<u8> = (1..=24).collect();
        let g = stripe_split(&bytes, 6, 4);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].get(Cell::new(0, 0)), Gf256(1));
        assert_eq!(g[0].get(Cell::new(0, 1)), Gf256(7));
        assert_eq!(g[0].get(Cell::new(5, 3)), Gf256(24));
        let g = stripe_split(&bytes, 5, 2);
        assert_eq!(g.len(), 3);
        assert_eq!(g[2].get(Cell::new(3, 1)), Gf256(0));
        assert_eq!(stripe_join(&g, 24), bytes);
    }

    #[test]
    fn header_is_31_bytes_and_roundtrips() {
        let p = CodeParams::c2_default(12, 8, 4, 2);
        let h = ShardHeader::new(p, 4, 9);
        let b = h.to_bytes();
        assert_eq!(b.len(), HEADER_LEN);
        assert_eq!(&b[..4], b"PBKC");
        assert_eq!(b[5], 2);
        assert_eq!(&b[6..8], &[0, 12]);
        assert_eq!(&b[10..12], &[0, 16]);
        assert_eq!(b[16], 2);
        assert_eq!(&b[17..19], &[0, 5]);
        assert_eq!(ShardHeader::parse(&b).unwrap(), h);
        assert_eq!(h.payload_length, 9 * 16);
    }

    #[test]
    fn header_errors() {
        let h = ShardHeader::new(CodeParams::c1(11, 6, 4, 2), 0, 1);
        let mut b = h.to_bytes();
        b[..4].copy_from_slice(b"XXXX");
        assert!(matches!(ShardHeader::parse(&b), Err(Error::BadMagic)));
        let mut b = h.to_bytes();
        b[4] = 2;
        assert!(matches!(ShardHeader::parse(&b), Err(Error::VersionMismatch(2))));
        let mut b = h.to_bytes();
        b[13] = 3; // L = 3 is infeasible for n = 11, r = 5
        assert!(matches!(ShardHeader::parse(&b), Err(Error::HeaderSpecMismatch(_))));
        let mut b = h.to_bytes();
        b[18] = 12;
        assert!(matches!(ShardHeader::parse(&b), Err(Error::HeaderSpecMismatch(_))));
        let shard = Shard {
            header: h,
            payload: vec![1, 2, 3, 4],
        };
        let bytes = shard.to_bytes();
        assert_eq!(Shard::parse(&bytes).unwrap(), shard);
        assert!(matches!(
            Shard::parse(&bytes[..bytes.len() - 1]),
            Err(Error::TruncatedPayload { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn manifest_roundtrip() {
        let m = Manifest {
            params: CodeParams::c1(11, 6, 4, 2),
            stripe_count: 3,
            file_length: 50,
            crc32: 0xdeadbeef,
        };
        let b = m.to_bytes();
        assert_eq!(b.len(), MANIFEST_LEN);
        assert_eq!(Manifest::parse(&b).unwrap(), m);
    }

    #[test]
    fn bytes_roundtrip_every_k_subset_prefix() {
        let code = c1();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [0usize, 1, 23, 24, 25, 71, 72] {
            let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let (man, shards) = encode_bytes(&code, &bytes).unwrap();
            assert_eq!(man.stripe_count as usize, len.div_ceil(24));
            let pick: Vec<&Shard> = [10, 2, 7, 0, 5, 8].iter().map(|&v| &shards[v]).collect();
            assert_eq!(decode_shards(&man, &pick).unwrap(), bytes);
        }
    }

    #[test]
    fn repair_matches_and_detects_missing_helpers() {
        let code = c1();
        let bytes: Vec<u8> = (0..500u32).map(|i| (i * 7 + 3) as u8).collect();
        let (man, shards) = encode_bytes(&code, &bytes).unwrap();
        for failed in 0..11 {
            let refs: Vec<Option<&Shard>> = shards
                .iter()
                .enumerate()
                .map(|(v, s)| (v != failed).then_some(s))
                .collect();
            let (rebuilt, report) = repair_shard(&man, &refs, failed).unwrap();
            assert_eq!(rebuilt, shards[failed]);
            assert_eq!(report.stripes, man.stripe_count);
        }
        let mut refs: Vec<Option<&Shard>> = shards.iter().map(Some).collect();
        refs[0] = None;
        refs[1] = None;
        assert!(matches!(
            repair_shard(&man, &refs, 0),
            Err(Error::InsufficientShards { .. })
        ));
    }

    #[test]
    fn corrupt_payload_fails_crc() {
        let code = c1();
        let bytes = vec![9u8; 100];
        let (man, mut shards) = encode_bytes(&code, &bytes).unwrap();
        shards[0].payload[0] ^= 1;
        let pick: Vec<&Shard> = shards[..6].iter().collect();
        assert!(matches!(decode_shards(&man, &pick), Err(Error::ChecksumMismatch { .. })));
    }
}
