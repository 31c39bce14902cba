//! Versioned binary model container ("NTC1") and the registry that resolves
//! lambda indices to trained models.
//!
//! Layout: magic "NTC1", u32 version, then length-prefixed sections, all
//! little-endian. One ARCH and one NORM section describe the architecture
//! and the pixel normalization; each MODL section holds one trained model
//! (lambda index, lambda, raw analysis/synthesis parameters in the DCT /
//! squared reparameterization, the per-channel density tables, and the
//! discrete PMFs that seed the entropy-coder contexts).

use crate::density::{DiscretePmf, MarginalDensity};
use crate::error::{NtcError, Result};
use crate::layers::PaddingMode;
use crate::transforms::{
    ArchitectureSpec, ColorMode, RawStage, StageSpec, TransformKind, TransformParams,
};
use std::io::{Read, Write};
use std::path::Path;

pub const CONTAINER_MAGIC: &[u8; 4] = b"NTC1";
const CONTAINER_VERSION: u32 = 1;

/// One trained operating point.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub lambda_index: u16,
    pub lambda: f64,
    pub analysis: TransformParams,
    pub synthesis: TransformParams,
    pub densities: Vec<MarginalDensity>,
    pub pmfs: Vec<DiscretePmf>,
}

impl TrainedModel {
    /// Bundle a training outcome, deriving the coder PMFs from the fitted
    /// densities.
    pub fn from_parts(
        lambda_index: u16,
        lambda: f64,
        analysis: TransformParams,
        synthesis: TransformParams,
        densities: Vec<MarginalDensity>,
    ) -> Result<TrainedModel> {
        let pmfs = densities
            .iter()
            .map(|d| d.discretize())
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainedModel {
            lambda_index,
            lambda,
            analysis,
            synthesis,
            densities,
            pmfs,
        })
    }
}

/// A model file: architecture, pixel normalization, trained models keyed by
/// lambda index.
#[derive(Debug, Clone)]
pub struct ModelContainer {
    pub spec: ArchitectureSpec,
    /// Pixels are divided by this before the analysis transform.
    pub norm_scale: f64,
    pub models: Vec<TrainedModel>,
}

impl ModelContainer {
    pub fn new(spec: ArchitectureSpec) -> ModelContainer {
        ModelContainer {
            spec,
            norm_scale: 255.0,
            models: Vec::new(),
        }
    }

    pub fn push_model(&mut self, model: TrainedModel) -> Result<()> {
        if self.models.iter().any(|m| m.lambda_index == model.lambda_index) {
            return Err(NtcError::Config(format!(
                "duplicate lambda index {}",
                model.lambda_index
            )));
        }
        self.models.push(model);
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CONTAINER_MAGIC);
        put_u32(&mut out, CONTAINER_VERSION);
        write_section(&mut out, b"ARCH", &encode_arch(&self.spec));
        let mut norm = Vec::new();
        put_f64(&mut norm, self.norm_scale);
        write_section(&mut out, b"NORM", &norm);
        for model in &self.models {
            write_section(&mut out, b"MODL", &encode_model(model));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ModelContainer> {
        let mut cur = Cursor::new(bytes);
        let magic = cur.take(4)?;
        if magic != CONTAINER_MAGIC {
            return Err(NtcError::Corrupt("not an NTC1 model container".into()));
        }
        let version = cur.u32()?;
        if version != CONTAINER_VERSION {
            return Err(NtcError::Corrupt(format!(
                "unsupported container version {version}"
            )));
        }
        let mut spec: Option<ArchitectureSpec> = None;
        let mut norm_scale: Option<f64> = None;
        let mut models = Vec::new();
        while !cur.at_end() {
            let tag: [u8; 4] = cur.take(4)?.try_into().unwrap();
            let len = cur.u64()? as usize;
            let body = cur.take(len)?;
            match &tag {
                b"ARCH" => spec = Some(decode_arch(body)?),
                b"NORM" => {
                    let mut c = Cursor::new(body);
                    norm_scale = Some(c.f64()?);
                }
                b"MODL" => {
                    let spec_ref = spec.as_ref().ok_or_else(|| {
                        NtcError::Corrupt("MODL section before ARCH".into())
                    })?;
                    models.push(decode_model(body, spec_ref)?);
                }
                other => {
                    return Err(NtcError::Corrupt(format!(
                        "unknown section tag {:?}",
                        String::from_utf8_lossy(other)
                    )))
                }
            }
        }
        let spec = spec.ok_or_else(|| NtcError::Corrupt("container has no ARCH section".into()))?;
        let norm_scale =
            norm_scale.ok_or_else(|| NtcError::Corrupt("container has no NORM section".into()))?;
        spec.validate()?;
        Ok(ModelContainer {
            spec,
            norm_scale,
            models,
        })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<ModelContainer> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        ModelContainer::from_bytes(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelContainer> {
        ModelContainer::from_bytes(&std::fs::read(path)?)
    }
}

/// Loaded containers; a compressed file's lambda index must resolve in one
/// of them.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    containers: Vec<ModelContainer>,
}

impl ModelRegistry {
    pub fn new() -> ModelRegistry {
        ModelRegistry::default()
    }

    pub fn push(&mut self, container: ModelContainer) {
        self.containers.push(container);
    }

    pub fn load(path: &Path) -> Result<ModelRegistry> {
        let mut reg = ModelRegistry::new();
        reg.push(ModelContainer::load(path)?);
        Ok(reg)
    }

    pub fn load_all(paths: &[impl AsRef<Path>]) -> Result<ModelRegistry> {
        let mut reg = ModelRegistry::new();
        for p in paths {
            reg.push(ModelContainer::load(p.as_ref())?);
        }
        Ok(reg)
    }

    pub fn resolve(&self, lambda_index: u16) -> Result<(&ModelContainer, &TrainedModel)> {
        for c in &self.containers {
            if let Some(m) = c.models.iter().find(|m| m.lambda_index == lambda_index) {
                return Ok((c, m));
            }
        }
        Err(NtcError::Parameter(format!(
            "lambda index {lambda_index} not found in the loaded models"
        )))
    }

    pub fn lambda_indices(&self) -> Vec<u16> {
        let mut v: Vec<u16> = self
            .containers
            .iter()
            .flat_map(|c| c.models.iter().map(|m| m.lambda_index))
            .collect();
        v.sort_unstable();
        v
    }
}

// --- little-endian primitives ---

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_i64(out: &mut Vec<u8>, v: i64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_i32(out: &mut Vec<u8>, v: i32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64_vec(out: &mut Vec<u8>, v: &[f64]) {
    put_u64(out, v.len() as u64);
    for &x in v {
        put_f64(out, x);
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Cursor<'a> {
        Cursor { bytes, pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(NtcError::Corrupt("container truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if n > self.bytes.len().saturating_sub(self.pos) / 8 {
            return Err(NtcError::Corrupt("vector length exceeds container".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

fn write_section(out: &mut Vec<u8>, tag: &[u8; 4], body: &[u8]) {
    out.extend_from_slice(tag);
    put_u64(out, body.len() as u64);
    out.extend_from_slice(body);
}

fn encode_arch(spec: &ArchitectureSpec) -> Vec<u8> {
    let mut b = Vec::new();
    b.push(match spec.color {
        ColorMode::Grayscale => 0u8,
        ColorMode::Rgb => 1,
    });
    b.push(match spec.padding {
        PaddingMode::Mirror => 0u8,
        PaddingMode::Zero => 1,
    });
    put_u32(&mut b, spec.stages.len() as u32);
    for s in &spec.stages {
        put_u32(&mut b, s.kernel_height as u32);
        put_u32(&mut b, s.kernel_width as u32);
        put_u32(&mut b, s.in_channels as u32);
        put_u32(&mut b, s.out_channels as u32);
        put_u32(&mut b, s.factor as u32);
    }
    b
}

fn decode_arch(body: &[u8]) -> Result<ArchitectureSpec> {
    let mut c = Cursor::new(body);
    let color = match c.take(1)?[0] {
        0 => ColorMode::Grayscale,
        1 => ColorMode::Rgb,
        v => return Err(NtcError::Corrupt(format!("bad color mode {v}"))),
    };
    let padding = match c.take(1)?[0] {
        0 => PaddingMode::Mirror,
        1 => PaddingMode::Zero,
        v => return Err(NtcError::Corrupt(format!("bad padding mode {v}"))),
    };
    let n = c.u32()? as usize;
    let mut stages = Vec::with_capacity(n);
    for _ in 0..n {
        stages.push(StageSpec {
            kernel_height: c.u32()? as usize,
            kernel_width: c.u32()? as usize,
            in_channels: c.u32()? as usize,
            out_channels: c.u32()? as usize,
            factor: c.u32()? as usize,
        });
    }
    Ok(ArchitectureSpec {
        stages,
        color,
        padding,
    })
}

fn encode_params(out: &mut Vec<u8>, params: &TransformParams) {
    put_u32(out, params.stages.len() as u32);
    for s in &params.stages {
        put_f64_vec(out, &s.dct_coeffs);
        put_f64_vec(out, &s.bias);
        put_f64_vec(out, &s.beta_raw);
        put_f64_vec(out, &s.gamma_raw);
    }
}

fn decode_params(c: &mut Cursor, kind: TransformKind) -> Result<TransformParams> {
    let n = c.u32()? as usize;
    let mut stages = Vec::with_capacity(n);
    for _ in 0..n {
        stages.push(RawStage {
            dct_coeffs: c.f64_vec()?,
            bias: c.f64_vec()?,
            beta_raw: c.f64_vec()?,
            gamma_raw: c.f64_vec()?,
        });
    }
    Ok(TransformParams { kind, stages })
}

fn encode_model(model: &TrainedModel) -> Vec<u8> {
    let mut b = Vec::new();
    put_u16(&mut b, model.lambda_index);
    put_f64(&mut b, model.lambda);
    encode_params(&mut b, &model.analysis);
    encode_params(&mut b, &model.synthesis);
    put_u32(&mut b, model.densities.len() as u32);
    for d in &model.densities {
        put_i64(&mut b, d.left_tenths());
        put_f64_vec(&mut b, d.samples());
    }
    put_u32(&mut b, model.pmfs.len() as u32);
    for p in &model.pmfs {
        put_i32(&mut b, p.q_min());
        put_i32(&mut b, p.mode());
        put_f64_vec(&mut b, p.probs());
    }
    b
}

fn decode_model(body: &[u8], spec: &ArchitectureSpec) -> Result<TrainedModel> {
    let mut c = Cursor::new(body);
    let lambda_index = c.u16()?;
    let lambda = c.f64()?;
    let analysis = decode_params(&mut c, TransformKind::Analysis)?;
    let synthesis = decode_params(&mut c, TransformKind::Synthesis)?;
    if analysis.stages.len() != spec.stages.len() || synthesis.stages.len() != spec.stages.len() {
        return Err(NtcError::Corrupt(
            "model stage count does not match architecture".into(),
        ));
    }
    let nd = c.u32()? as usize;
    let mut densities = Vec::with_capacity(nd);
    for ch in 0..nd {
        let left_tenths = c.i64()?;
        let samples = c.f64_vec()?;
        densities.push(MarginalDensity::from_parts(left_tenths, samples, ch).map_err(
            |e| NtcError::Corrupt(format!("bad density table: {e}")),
        )?);
    }
    let np = c.u32()? as usize;
    let mut pmfs = Vec::with_capacity(np);
    for _ in 0..np {
        let q_min = c.i32()?;
        let mode = c.i32()?;
        let probs = c.f64_vec()?;
        pmfs.push(
            DiscretePmf::from_stored(q_min, probs, mode)
                .map_err(|e| NtcError::Corrupt(format!("bad PMF: {e}")))?,
        );
    }
    if densities.len() != spec.code_channels() || pmfs.len() != spec.code_channels() {
        return Err(NtcError::Corrupt(
            "density table count does not match code channels".into(),
        ));
    }
    Ok(TrainedModel {
        lambda_index,
        lambda,
        analysis,
        synthesis,
        densities,
        pmfs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::init_params;

    fn build_container() -> ModelContainer {
        let spec = ArchitectureSpec::shrunken(3, ColorMode::Grayscale);
        let (phi, theta) = init_params(&spec, 5).unwrap();
        let densities: Vec<MarginalDensity> = (0..3)
            .map(|c| MarginalDensity::uniform(-4.0, 4.0, c).unwrap())
            .collect();
        let model = TrainedModel::from_parts(2, 512.0, phi, theta, densities).unwrap();
        let mut container = ModelContainer::new(spec);
        container.push_model(model).unwrap();
        container
    }

    #[test]
    fn container_roundtrip_is_exact() {
        let container = build_container();
        let bytes = container.to_bytes();
        let back = ModelContainer::from_bytes(&bytes).unwrap();
        assert_eq!(back.spec, container.spec);
        assert_eq!(back.norm_scale, container.norm_scale);
        assert_eq!(back.models.len(), 1);
        let (a, b) = (&container.models[0], &back.models[0]);
        assert_eq!(a.lambda_index, b.lambda_index);
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.analysis, b.analysis);
        assert_eq!(a.synthesis, b.synthesis);
        assert_eq!(a.densities, b.densities);
        assert_eq!(a.pmfs, b.pmfs);
    }

    #[test]
    fn registry_resolves_and_rejects() {
        let container = build_container();
        let mut reg = ModelRegistry::new();
        reg.push(container);
        assert!(reg.resolve(2).is_ok());
        assert!(reg.resolve(7).is_err());
        assert_eq!(reg.lambda_indices(), vec![2]);
    }

    #[test]
    fn truncated_container_is_corrupt() {
        let bytes = build_container().to_bytes();
        for cut in [3usize, 9, 20, bytes.len() / 2, bytes.len() - 1] {
            match ModelContainer::from_bytes(&bytes[..cut]) {
                Err(NtcError::Corrupt(_)) => {}
                other => panic!("cut at {cut}: expected corrupt error, got {other:?}"),
            }
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = build_container().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            ModelContainer::from_bytes(&bytes),
            Err(NtcError::Corrupt(_))
        ));
    }

    #[test]
    fn duplicate_lambda_index_is_rejected() {
        let mut container = build_container();
        let dup = container.models[0].clone();
        assert!(container.push_model(dup).is_err());
    }
}
