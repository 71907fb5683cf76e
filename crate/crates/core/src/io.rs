//! JSON file formats shared by the CLI and tests.
//!
//! - matrix: `{"slots": [{"label", "dim"}...], "entries": [[re, im]...]}`
//!   with entries row-major over the product of slot dimensions; decimal
//!   round-trips are exact to 1e-12, not bit-exact.
//! - process matrix: the matrix object plus `"parties": [{"name", "d_in",
//!   "d_out"}...]`.
//! - instrument: `{"party": {...}, "outcomes": [matrix...]}`.
//! - probability table: `{"scenario": {"parties", "settings", "outcomes"},
//!   "p": nested}` where `p[s1]...[sn][o1]...[on]` follows party order.
//! - game: the table's scenario with `"payoff"` nested like `p` and
//!   `"setting_distribution"` nested over settings only.

use crate::choi::{Instrument, PartySpec};
use crate::correlations::{ProbabilityTable, Scenario};
use crate::polytope::Game;
use crate::procmat::ProcessMatrix;
use crate::qlinalg::{ComplexMatrix, Slot, TensorSpace};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixFile {
    slots: Vec<Slot>,
    entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    fn pack(m: &ComplexMatrix, space: &TensorSpace) -> Result<Self> {
        if space.dim() != m.nrows() || m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, slots give {}",
                m.nrows(),
                m.ncols(),
                space.dim()
            )));
        }
        let mut entries = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                entries.push([z.re, z.im]);
            }
        }
        Ok(MatrixFile { slots: space.slots().to_vec(), entries })
    }

    fn unpack(self) -> Result<(ComplexMatrix, TensorSpace)> {
        let space = TensorSpace::new(self.slots)?;
        let d = space.dim();
        if self.entries.len() != d * d {
            return Err(Error::Dimension(format!(
                "expected {} entries for dimension {d}, got {}",
                d * d,
                self.entries.len()
            )));
        }
        let mut m = ComplexMatrix::zeros(d, d);
        for (flat, [re, im]) in self.entries.into_iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::InvalidInput("non-finite matrix entry".into()));
            }
            m[(flat / d, flat % d)] = Complex64::new(re, im);
        }
        Ok((m, space))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProcessFile {
    parties: Vec<PartySpec>,
    #[serde(flatten)]
    matrix: MatrixFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstrumentFile {
    party: PartySpec,
    outcomes: Vec<MatrixFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TableFile {
    scenario: Scenario,
    p: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GameFile {
    scenario: Scenario,
    payoff: Value,
    setting_distribution: Value,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Nested arrays of the given dimensions from a flat row-major slice.
pub(crate) fn nest(dims: &[usize], flat: &[f64]) -> Value {
    match dims.split_first() {
        None => Value::from(flat[0]),
        Some((&d, rest)) => {
            let stride = flat.len() / d;
            Value::Array(
                (0..d)
                    .map(|i| nest(rest, &flat[i * stride..(i + 1) * stride]))
                    .collect(),
            )
        }
    }
}

/// Flat row-major vector from nested arrays, validating the shape.
pub(crate) fn flatten(dims: &[usize], v: &Value, out: &mut Vec<f64>) -> Result<()> {
    match dims.split_first() {
        None => match v.as_f64() {
            Some(x) if x.is_finite() => {
                out.push(x);
                Ok(())
            }
            _ => Err(Error::InvalidInput("expected a finite number".into())),
        },
        Some((&d, rest)) => {
            let arr = v
                .as_array()
                .ok_or_else(|| Error::InvalidInput("expected a nested array".into()))?;
            if arr.len() != d {
                return Err(Error::Dimension(format!(
                    "expected array of length {d}, got {}",
                    arr.len()
                )));
            }
            for item in arr {
                flatten(rest, item, out)?;
            }
            Ok(())
        }
    }
}

pub(crate) fn table_dims(scenario: &Scenario) -> Vec<usize> {
    scenario
        .settings
        .iter()
        .chain(scenario.outcomes.iter())
        .copied()
        .collect()
}

pub fn write_matrix(path: &Path, m: &ComplexMatrix, space: &TensorSpace) -> Result<()> {
    write_json(path, &MatrixFile::pack(m, space)?)
}

pub fn read_matrix(path: &Path) -> Result<(ComplexMatrix, TensorSpace)> {
    read_json::<MatrixFile>(path)?.unpack()
}

pub fn write_process(path: &Path, w: &ProcessMatrix) -> Result<()> {
    let file = ProcessFile {
        parties: w.parties().to_vec(),
        matrix: MatrixFile::pack(w.matrix(), w.space())?,
    };
    write_json(path, &file)
}

pub fn read_process(path: &Path) -> Result<ProcessMatrix> {
    let file: ProcessFile = read_json(path)?;
    let (m, _space) = file.matrix.unpack()?;
    ProcessMatrix::new(file.parties, m)
}

pub fn write_instrument(path: &Path, inst: &Instrument) -> Result<()> {
    let space = TensorSpace::new(vec![
        Slot::new(format!("{}_in", inst.party.name), inst.party.d_in),
        Slot::new(format!("{}_out", inst.party.name), inst.party.d_out),
    ])?;
    let outcomes = inst
        .outcomes
        .iter()
        .map(|m| MatrixFile::pack(m, &space))
        .collect::<Result<Vec<_>>>()?;
    write_json(path, &InstrumentFile { party: inst.party.clone(), outcomes })
}

pub fn read_instrument(path: &Path) -> Result<Instrument> {
    let file: InstrumentFile = read_json(path)?;
    let outcomes = file
        .outcomes
        .into_iter()
        .map(|m| m.unpack().map(|(matrix, _)| matrix))
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(file.party, outcomes)
}

/// Several instruments (one per setting) for one party, stored as a JSON
/// array of instrument objects.
pub fn read_instrument_list(path: &Path) -> Result<Vec<Instrument>> {
    let files: Vec<InstrumentFile> = read_json(path)?;
    files
        .into_iter()
        .map(|file| {
            let outcomes = file
                .outcomes
                .into_iter()
                .map(|m| m.unpack().map(|(matrix, _)| matrix))
                .collect::<Result<Vec<_>>>()?;
            Instrument::new(file.party, outcomes)
        })
        .collect()
}

pub fn write_instrument_list(path: &Path, instruments: &[Instrument]) -> Result<()> {
    let files = instruments
        .iter()
        .map(|inst| {
            let space = TensorSpace::new(vec![
                Slot::new(format!("{}_in", inst.party.name), inst.party.d_in),
                Slot::new(format!("{}_out", inst.party.name), inst.party.d_out),
            ])?;
            let outcomes = inst
                .outcomes
                .iter()
                .map(|m| MatrixFile::pack(m, &space))
                .collect::<Result<Vec<_>>>()?;
            Ok(InstrumentFile { party: inst.party.clone(), outcomes })
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(path, &files)
}

pub fn write_table(path: &Path, table: &ProbabilityTable) -> Result<()> {
    let file = TableFile {
        scenario: table.scenario.clone(),
        p: nest(&table_dims(&table.scenario), &table.p),
    };
    write_json(path, &file)
}

pub fn read_table(path: &Path) -> Result<ProbabilityTable> {
    let file: TableFile = read_json(path)?;
    let dims = table_dims(&file.scenario);
    let mut p = Vec::with_capacity(dims.iter().product());
    flatten(&dims, &file.p, &mut p)?;
    ProbabilityTable::new(file.scenario, p)
}

pub fn write_game(path: &Path, game: &Game) -> Result<()> {
    let file = GameFile {
        scenario: game.scenario.clone(),
        payoff: nest(&table_dims(&game.scenario), &game.payoff),
        setting_distribution: nest(&game.scenario.settings, &game.setting_distribution),
    };
    write_json(path, &file)
}

pub fn read_game(path: &Path) -> Result<Game> {
    let file: GameFile = read_json(path)?;
    let dims = table_dims(&file.scenario);
    let mut payoff = Vec::with_capacity(dims.iter().product());
    flatten(&dims, &file.payoff, &mut payoff)?;
    let mut setting_distribution = Vec::new();
    flatten(&file.scenario.settings, &file.setting_distribution, &mut setting_distribution)?;
    let game = Game { scenario: file.scenario, payoff, setting_distribution };
    game.validate()?;
    Ok(game)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::measure_prepare;
    use crate::gallery;
    use crate::suite::generators;
    use crate::Tolerances;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("causality-kit-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn process_round_trip() {
        let w = gallery::ocb_process();
        let path = tmp("proc.json");
        write_process(&path, &w).unwrap();
        let back = read_process(&path).unwrap();
        assert_eq!(back.parties(), w.parties());
        assert!(back.matrix().max_abs_diff(w.matrix()) < 1e-12);
    }

    #[test]
    fn matrix_round_trip_with_complex_entries() {
        let mut rng = generators::rng(3);
        let m = generators::random_psd(&mut rng, 6, 6);
        let space = TensorSpace::new(vec![Slot::new("x", 2), Slot::new("y", 3)]).unwrap();
        let path = tmp("mat.json");
        write_matrix(&path, &m, &space).unwrap();
        let (back, back_space) = read_matrix(&path).unwrap();
        assert_eq!(back_space, space);
        assert!(back.max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn instrument_round_trip() {
        let tol = Tolerances::default();
        let party = PartySpec::new("B", 2, 2);
        let povm = vec![
            ComplexMatrix::identity(2).scale_re(0.5),
            ComplexMatrix::identity(2).scale_re(0.5),
        ];
        let preps = vec![
            generators::random_density(&mut generators::rng(1), 2),
            generators::random_density(&mut generators::rng(2), 2),
        ];
        let inst = measure_prepare(&party, &povm, &preps, &tol).unwrap();
        let path = tmp("inst.json");
        write_instrument(&path, &inst).unwrap();
        let back = read_instrument(&path).unwrap();
        assert_eq!(back.party, inst.party);
        for (a, b) in back.outcomes.iter().zip(&inst.outcomes) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
    }

    #[test]
    fn table_and_game_round_trip() {
        let mut rng = generators::rng(9);
        let scenario = Scenario::new(
            vec!["A".into(), "B".into()],
            vec![2, 3],
            vec![2, 2],
        )
        .unwrap();
        let table = generators::random_table(&mut rng, &scenario);
        let path = tmp("table.json");
        write_table(&path, &table).unwrap();
        let back = read_table(&path).unwrap();
        assert_eq!(back.scenario, table.scenario);
        assert!(back.max_abs_diff(&table) < 1e-12);

        let game = gallery::ocb_game();
        let gpath = tmp("game.json");
        write_game(&gpath, &game).unwrap();
        let gback = read_game(&gpath).unwrap();
        assert_eq!(gback.scenario, game.scenario);
        let payoff_diff = gback
            .payoff
            .iter()
            .zip(&game.payoff)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(payoff_diff < 1e-12);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let path = tmp("bad.json");
        std::fs::write(&path, "{\"slots\": [], \"entries\": [[0.0]]}").unwrap();
        assert!(read_matrix(&path).is_err());
        std::fs::write(&path, "not json").unwrap();
        assert!(read_matrix(&path).is_err());
        let missing = tmp("does-not-exist.json");
        assert!(read_process(&missing).is_err());
    }
}
