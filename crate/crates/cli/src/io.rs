//! Scenario file format: a versioned JSON document with exact rationals as
//! "p/q" strings and symbolic value-group elements as maps over declared
//! generator names.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use canmeas::gamma::Gamma;
use canmeas::lattice::{BilinearForm, Lattice};
use canmeas::mat::QMat;
use canmeas::measure::Scenario;
use canmeas::modelfun::{delaunay_model_function, CocycleData, ModelFunction};
use canmeas::periodic::PeriodicDecomposition;
use canmeas::polytope::{AffineMap, Polytope};
use canmeas::rat::{Int, QVec, Rat};
use canmeas::skeleton::{
    CanonicalSimplex, FaceEmbedding, SkeletonComplex, Stratum, StratumWeights, TropicalMap,
};

/// Errors mapped to exit codes: `Parse` is exit 2, `Invalid` exit 1.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Invalid(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<canmeas::Error> for CliError {
    fn from(e: canmeas::Error) -> Self {
        CliError::Invalid(format!("{e:?}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn parse_rat(s: &str) -> CliResult<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = Int::from_str(num)
        .map_err(|_| CliError::Parse(format!("bad rational numerator in {s:?}")))?;
    let d = Int::from_str(den)
        .map_err(|_| CliError::Parse(format!("bad rational denominator in {s:?}")))?;
    if d == Int::from(0) {
        return Err(CliError::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(n, d))
}

pub fn fmt_rat(q: &Rat) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Rational formatting for report tables: the unit denominator is dropped.
pub fn show_rat(q: &Rat) -> String {
    if q.denom() == &Int::from(1) {
        format!("{}", q.numer())
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn show_vec(v: &[Rat]) -> String {
    let parts: Vec<String> = v.iter().map(show_rat).collect();
    format!("({})", parts.join(", "))
}

/// A value-group element: either a plain rational string or a map from
/// declared generator names (plus "const") to rational coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaJson {
    Plain(String),
    Symbolic(BTreeMap<String, String>),
}

pub fn parse_gamma(g: &GammaJson, symbols: &[String]) -> CliResult<Gamma> {
    match g {
        GammaJson::Plain(s) => Ok(Gamma::from_rat(parse_rat(s)?)),
        GammaJson::Symbolic(map) => {
            let mut out = Gamma::zero();
            for (name, value) in map {
                let q = parse_rat(value)?;
                if name == "const" {
                    out = out.add(&Gamma::from_rat(q));
                } else {
                    let i = symbols.iter().position(|s| s == name).ok_or_else(|| {
                        CliError::Parse(format!("undeclared generator {name:?}"))
                    })?;
                    out = out.add(&Gamma::generator(i, q));
                }
            }
            Ok(out)
        }
    }
}

pub fn emit_gamma(g: &Gamma, symbols: &[String]) -> GammaJson {
    if g.is_rational() {
        return GammaJson::Plain(fmt_rat(g.rational_part()));
    }
    let mut map = BTreeMap::new();
    if !num_is_zero(g.rational_part()) {
        map.insert("const".to_string(), fmt_rat(g.rational_part()));
    }
    for (i, c) in g.coeffs.iter().enumerate() {
        if !num_is_zero(c) {
            map.insert(symbols[i].clone(), fmt_rat(c));
        }
    }
    GammaJson::Symbolic(map)
}

fn num_is_zero(q: &Rat) -> bool {
    q.numer() == &Int::from(0)
}

pub fn show_gamma(g: &Gamma, symbols: &[String]) -> String {
    if g.is_rational() {
        return show_rat(g.rational_part());
    }
    let mut parts = Vec::new();
    if !num_is_zero(g.rational_part()) {
        parts.push(show_rat(g.rational_part()));
    }
    for (i, c) in g.coeffs.iter().enumerate() {
        if !num_is_zero(c) {
            let name = symbols
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("g{i}"));
            parts.push(format!("{}*{}", show_rat(c), name));
        }
    }
    if parts.is_empty() {
        parts.push("0".to_string());
    }
    parts.join(" + ")
}

fn parse_vec(v: &[String]) -> CliResult<QVec> {
    v.iter().map(|s| parse_rat(s)).collect()
}

fn emit_vec(v: &[Rat]) -> Vec<String> {
    v.iter().map(fmt_rat).collect()
}

fn parse_mat(rows: &[Vec<String>]) -> CliResult<QMat> {
    let data: Vec<QVec> = rows.iter().map(|r| parse_vec(r)).collect::<CliResult<_>>()?;
    if data.is_empty() {
        return Ok(QMat::zeros(0, 0));
    }
    let cols = data[0].len();
    if data.iter().any(|r| r.len() != cols) {
        return Err(CliError::Parse("ragged matrix".to_string()));
    }
    Ok(QMat::from_rows(&data))
}

fn emit_mat(m: &QMat) -> Vec<Vec<String>> {
    (0..m.rows).map(|i| emit_vec(&m.row(i))).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionJson {
    /// Cells as vertex lists.
    pub cells: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<GammaJson>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DelaunayJson {
    /// Index into `forms`.
    pub form: usize,
    pub radius: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PieceJson {
    pub slope: Vec<String>,
    pub offset: GammaJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CocycleJson {
    pub form: Vec<Vec<String>>,
    pub z0: Vec<GammaJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFunctionJson {
    Delaunay { delaunay: DelaunayJson },
    Explicit { pieces: Vec<PieceJson>, cocycle: CocycleJson },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightJson {
    pub key: Vec<usize>,
    pub value: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StratumJson {
    pub dim: usize,
    pub weights: Vec<WeightJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimplexJson {
    pub r: usize,
    pub pi_val: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncidenceJson {
    pub sub: usize,
    pub sup: usize,
    pub mat: Vec<Vec<String>>,
    pub off: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkeletonJson {
    pub strata: Vec<StratumJson>,
    pub simplices: Vec<SimplexJson>,
    #[serde(default)]
    pub incidence: Vec<IncidenceJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapJson {
    pub mat: Vec<Vec<String>>,
    pub off: Vec<GammaJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default)]
    pub gamma_symbols: Vec<String>,
    pub n: usize,
    pub b: usize,
    pub d: usize,
    /// Lattice basis columns.
    pub lattice: Vec<Vec<String>>,
    /// Symmetric form matrices, row-major.
    pub forms: Vec<Vec<Vec<String>>>,
    pub deg_f: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_function: Option<ModelFunctionJson>,
    pub skeleton: SkeletonJson,
    pub tropical_map: Vec<MapJson>,
}

/// The parsed scenario with the auxiliary periodic decomposition, when one
/// was provided.
pub struct Loaded {
    pub scn: Scenario,
    pub dec: Option<PeriodicDecomposition>,
    pub symbols: Vec<String>,
}

pub fn read_scenario(path: &str) -> CliResult<(ScenarioFile, Loaded)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {path}: {e}")))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("cannot parse {path}: {e}")))?;
    let loaded = build_scenario(&file)?;
    Ok((file, loaded))
}

pub fn build_scenario(file: &ScenarioFile) -> CliResult<Loaded> {
    if file.version != 1 {
        return Err(CliError::Parse(format!(
            "unsupported scenario version {}",
            file.version
        )));
    }
    let n = file.n;
    let basis: Vec<QVec> = file
        .lattice
        .iter()
        .map(|c| parse_vec(c))
        .collect::<CliResult<_>>()?;
    let lattice = Lattice::from_basis(n, basis)?;
    let mut forms = Vec::new();
    for f in &file.forms {
        forms.push(BilinearForm::new(parse_mat(f)?)?);
    }
    let deg_f = parse_rat(&file.deg_f)?;
    let dec = match &file.decomposition {
        None => None,
        Some(dj) => {
            let mut cells = Vec::new();
            for verts in &dj.cells {
                let vs: Vec<QVec> =
                    verts.iter().map(|v| parse_vec(v)).collect::<CliResult<_>>()?;
                cells.push(Polytope::from_vertices(n, &vs)?);
            }
            let mut dec = PeriodicDecomposition::new(lattice.clone(), cells)?;
            if let Some(shift) = &dj.shift {
                let s: Vec<Gamma> = shift
                    .iter()
                    .map(|g| parse_gamma(g, &file.gamma_symbols))
                    .collect::<CliResult<_>>()?;
                dec = dec.with_shift(s)?;
            }
            Some(dec)
        }
    };
    let mf = match &file.model_function {
        None => None,
        Some(ModelFunctionJson::Delaunay { delaunay }) => {
            let form = forms
                .get(delaunay.form)
                .ok_or_else(|| CliError::Parse("delaunay form index out of range".into()))?;
            Some(delaunay_model_function(
                form.clone(),
                lattice.clone(),
                delaunay.radius,
            )?)
        }
        Some(ModelFunctionJson::Explicit { pieces, cocycle }) => {
            let dec = dec
                .clone()
                .ok_or_else(|| CliError::Parse("explicit model function needs cells".into()))?;
            let ps: Vec<(QVec, Gamma)> = pieces
                .iter()
                .map(|p| {
                    Ok((
                        parse_vec(&p.slope)?,
                        parse_gamma(&p.offset, &file.gamma_symbols)?,
                    ))
                })
                .collect::<CliResult<_>>()?;
            let b = BilinearForm::new(parse_mat(&cocycle.form)?)?;
            let z0: Vec<Gamma> = cocycle
                .z0
                .iter()
                .map(|g| parse_gamma(g, &file.gamma_symbols))
                .collect::<CliResult<_>>()?;
            Some(ModelFunction::new(dec, ps, CocycleData::new(b, z0)?)?)
        }
    };
    let mut strata = Vec::new();
    for (id, st) in file.skeleton.strata.iter().enumerate() {
        let mut table = BTreeMap::new();
        for w in &st.weights {
            let mut key = w.key.clone();
            key.sort_unstable();
            table.insert(key, parse_rat(&w.value)?);
        }
        strata.push(Stratum {
            id,
            dim_stratum: st.dim,
            weights: StratumWeights { table },
        });
    }
    let mut simplices = Vec::new();
    for sx in &file.skeleton.simplices {
        simplices.push(CanonicalSimplex::new(sx.r, parse_rat(&sx.pi_val)?)?);
    }
    let mut incidence = Vec::new();
    for inc in &file.skeleton.incidence {
        incidence.push(FaceEmbedding {
            sub: inc.sub,
            sup: inc.sup,
            map: AffineMap {
                mat: parse_mat(&inc.mat)?,
                off: parse_vec(&inc.off)?,
            },
        });
    }
    let maps: Vec<(QMat, Vec<Gamma>)> = file
        .tropical_map
        .iter()
        .map(|m| {
            Ok((
                parse_mat(&m.mat)?,
                m.off
                    .iter()
                    .map(|g| parse_gamma(g, &file.gamma_symbols))
                    .collect::<CliResult<_>>()?,
            ))
        })
        .collect::<CliResult<_>>()?;
    let sk = SkeletonComplex {
        n,
        d: file.d,
        lattice: lattice.clone(),
        strata,
        simplices,
        incidence,
    };
    let scn = Scenario {
        n,
        b: file.b,
        d: file.d,
        lattice,
        forms,
        sk,
        tm: TropicalMap { maps },
        mf,
        deg_f,
    };
    Ok(Loaded {
        scn,
        dec,
        symbols: file.gamma_symbols.clone(),
    })
}

/// Serializes a scenario back to the file format; the model function, when
/// present, is written with explicit pieces so the file is self-contained.
pub fn emit_scenario(loaded: &Loaded) -> ScenarioFile {
    let scn = &loaded.scn;
    let symbols = &loaded.symbols;
    let lattice = (0..scn.lattice.rank())
        .map(|j| emit_vec(&scn.lattice.basis_matrix().col(j)))
        .collect();
    let forms = scn.forms.iter().map(|f| emit_mat(&f.mat)).collect();
    let dec_src = scn.mf.as_ref().map(|mf| &mf.dec).or(loaded.dec.as_ref());
    let decomposition = dec_src.map(|dec| DecompositionJson {
        cells: dec
            .cells
            .iter()
            .map(|c| c.vertices.iter().map(|v| emit_vec(v)).collect())
            .collect(),
        shift: if dec.shift.iter().all(|g| g.is_zero()) {
            None
        } else {
            Some(dec.shift.iter().map(|g| emit_gamma(g, symbols)).collect())
        },
    });
    let model_function = scn.mf.as_ref().map(|mf| ModelFunctionJson::Explicit {
        pieces: mf
            .pieces
            .iter()
            .map(|(m, c)| PieceJson {
                slope: emit_vec(m),
                offset: emit_gamma(c, symbols),
            })
            .collect(),
        cocycle: CocycleJson {
            form: emit_mat(&mf.cocycle.b.mat),
            z0: mf.cocycle.z0.iter().map(|g| emit_gamma(g, symbols)).collect(),
        },
    });
    let skeleton = SkeletonJson {
        strata: scn
            .sk
            .strata
            .iter()
            .map(|st| StratumJson {
                dim: st.dim_stratum,
                weights: st
                    .weights
                    .table
                    .iter()
                    .map(|(k, v)| WeightJson { key: k.clone(), value: fmt_rat(v) })
                    .collect(),
            })
            .collect(),
        simplices: scn
            .sk
            .simplices
            .iter()
            .map(|sx| SimplexJson { r: sx.r, pi_val: fmt_rat(&sx.pi_val) })
            .collect(),
        incidence: scn
            .sk
            .incidence
            .iter()
            .map(|inc| IncidenceJson {
                sub: inc.sub,
                sup: inc.sup,
                mat: emit_mat(&inc.map.mat),
                off: emit_vec(&inc.map.off),
            })
            .collect(),
    };
    let tropical_map = scn
        .tm
        .maps
        .iter()
        .map(|(m, off)| MapJson {
            mat: emit_mat(m),
            off: off.iter().map(|g| emit_gamma(g, symbols)).collect(),
        })
        .collect();
    ScenarioFile {
        version: 1,
        gamma_symbols: symbols.clone(),
        n: scn.n,
        b: scn.b,
        d: scn.d,
        lattice,
        forms,
        deg_f: fmt_rat(&scn.deg_f),
        decomposition,
        model_function,
        skeleton,
        tropical_map,
    }
}

/// Parses "a,b;c,d" into a symmetric matrix.
pub fn parse_inline_matrix(s: &str) -> CliResult<QMat> {
    let rows: Vec<Vec<String>> = s
        .split(';')
        .map(|r| r.split(',').map(|x| x.trim().to_string()).collect())
        .collect();
    parse_mat(&rows)
}

/// Parses "v1;v2;..." with comma-separated coordinates into a polytope.
pub fn parse_region(s: &str, n: usize) -> CliResult<Polytope> {
    let verts: Vec<QVec> = s
        .split(';')
        .map(|v| {
            v.split(',')
                .map(|x| parse_rat(x))
                .collect::<CliResult<QVec>>()
        })
        .collect::<CliResult<_>>()?;
    if verts.iter().any(|v| v.len() != n) {
        return Err(CliError::Parse(format!("region vertices must have {n} coordinates")));
    }
    Polytope::from_vertices(n, &verts).map_err(CliError::from)
}

/// FNV-1a digest of the input bytes, for the report header.
pub fn digest(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
