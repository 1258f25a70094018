use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::aggregate::LabelMatrix;
use crate::rng::{self, Rng};
use crate::tsv::{self, Table};
use crate::{Error, Result};

/// Shape of a repeated cross-validation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldConfig {
    pub repetitions: usize,
    pub folds: usize,
    /// Share of the whole corpus used for model selection in each folding.
    pub dev_fraction: f64,
    pub seed: u64,
}

impl FoldConfig {
    /// Five repetitions of 5-fold cross-validation, 70/10/20.
    pub fn standard(seed: u64) -> Self {
        FoldConfig {
            repetitions: 5,
            folds: 5,
            dev_fraction: 0.1,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Folding {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

/// Train/dev/test assignments for every (repetition, fold).
///
/// `foldings[r][f]` is fold `f` of repetition `r`, both 0-based in memory
/// and 1-based in files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    /// `None` when the plan was read back from a file.
    pub seed: Option<u64>,
    pub repetitions: usize,
    pub folds: usize,
    pub foldings: Vec<Vec<Folding>>,
}

/// Iterative multi-label stratification with hard part sizes.
///
/// Labels are visited rarest first; each positive example of the current
/// label goes to the part that still wants the most of that label, ties
/// broken by remaining room and then at random. Examples without any
/// positive label fill the remaining room.
fn stratify(rows: &[[bool; 14]], members: &[usize], capacities: &[usize], rng: &mut Rng) -> Vec<Vec<usize>> {
    let total = members.len();
    debug_assert_eq!(capacities.iter().sum::<usize>(), total);
    let mut room: Vec<usize> = capacities.to_vec();
    let mut positives = [0usize; 14];
    for &m in members {
        for (p, &y) in positives.iter_mut().zip(&rows[m]) {
            *p += usize::from(y);
        }
    }
    let mut wanted: Vec<[f64; 14]> = capacities
        .iter()
        .map(|&c| positives.map(|p| p as f64 * c as f64 / total as f64))
        .collect();

    let mut order = members.to_vec();
    order.shuffle(rng);
    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); capacities.len()];
    let mut placed: HashSet<usize> = HashSet::with_capacity(total);
    let mut remaining = positives;

    let mut place = |m: usize, j: usize, room: &mut Vec<usize>, wanted: &mut Vec<[f64; 14]>, remaining: &mut [usize; 14]| {
        parts[j].push(m);
        room[j] -= 1;
        for l in 0..14 {
            if rows[m][l] {
                wanted[j][l] -= 1.0;
                remaining[l] -= 1;
            }
        }
    };

    loop {
        let Some(label) = (0..14)
            .filter(|&l| remaining[l] > 0)
            .min_by_key(|&l| (remaining[l], l))
        else {
            break;
        };
        for &m in &order {
            if !rows[m][label] || placed.contains(&m) {
                continue;
            }
            let open: Vec<usize> = (0..room.len()).filter(|&j| room[j] > 0).collect();
            let best = open
                .iter()
                .map(|&j| wanted[j][label])
                .fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<usize> = open.into_iter().filter(|&j| wanted[j][label] == best).collect();
            let most_room = tied.iter().map(|&j| room[j]).max().unwrap_or(0);
            let tied: Vec<usize> = tied.into_iter().filter(|&j| room[j] == most_room).collect();
            let j = tied[rng.random_range(0..tied.len())];
            placed.insert(m);
            place(m, j, &mut room, &mut wanted, &mut remaining);
        }
    }
    for &m in &order {
        if placed.contains(&m) {
            continue;
        }
        let most_room = room.iter().copied().max().unwrap_or(0);
        let tied: Vec<usize> = (0..room.len()).filter(|&j| room[j] == most_room).collect();
        let j = tied[rng.random_range(0..tied.len())];
        placed.insert(m);
        place(m, j, &mut room, &mut wanted, &mut remaining);
    }
    let targets: Vec<[f64; 14]> = capacities
        .iter()
        .map(|&c| positives.map(|p| p as f64 * c as f64 / total as f64))
        .collect();
    refine(rows, &mut parts, &targets, rng);
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

/// Seeded hill climbing over pairwise swaps between parts. The greedy pass
/// only looks at one label per decision, so frequent labels can drift a few
/// points; swaps keep every size fixed and only ever lower the squared
/// distance of the positive counts to their targets.
fn refine(rows: &[[bool; 14]], parts: &mut [Vec<usize>], targets: &[[f64; 14]], rng: &mut Rng) {
    let k = parts.len();
    let total: usize = parts.iter().map(Vec::len).sum();
    if k < 2 || total < 2 {
        return;
    }
    let mut excess: Vec<[f64; 14]> = parts
        .iter()
        .zip(targets)
        .map(|(p, t)| {
            let mut e = t.map(|x| -x);
            for &m in p {
                for l in 0..14 {
                    e[l] += f64::from(u8::from(rows[m][l]));
                }
            }
            e
        })
        .collect();
    let budget = 60 * total;
    let mut idle = 0;
    for _ in 0..budget {
        let i = rng.random_range(0..k);
        let j = rng.random_range(0..k);
        if i == j || parts[i].is_empty() || parts[j].is_empty() {
            continue;
        }
        let ai = rng.random_range(0..parts[i].len());
        let bj = rng.random_range(0..parts[j].len());
        let (a, b) = (parts[i][ai], parts[j][bj]);
        let mut delta = 0.0;
        for l in 0..14 {
            match (rows[a][l], rows[b][l]) {
                (true, false) => delta += 2.0 - 2.0 * excess[i][l] + 2.0 * excess[j][l],
                (false, true) => delta += 2.0 + 2.0 * excess[i][l] - 2.0 * excess[j][l],
                _ => {}
            }
        }
        if delta < -1e-9 {
            parts[i][ai] = b;
            parts[j][bj] = a;
            for l in 0..14 {
                let shift = f64::from(i8::from(rows[a][l]) - i8::from(rows[b][l]));
                excess[i][l] -= shift;
                excess[j][l] += shift;
            }
            idle = 0;
        } else {
            idle += 1;
            if idle > 20 * total {
                break;
            }
        }
    }
}

/// Builds the standard 5 x 5 plan with a 70/10/20 split.
pub fn make_folds(labels: &LabelMatrix, seed: u64) -> Result<FoldPlan> {
    make_folds_with(labels, FoldConfig::standard(seed))
}

pub fn make_folds_with(labels: &LabelMatrix, config: FoldConfig) -> Result<FoldPlan> {
    let n = labels.len();
    let k = config.folds;
    if k < 2 || config.repetitions == 0 {
        return Err(Error::InvalidInput("need at least 2 folds and 1 repetition".into()));
    }
    if config.repetitions > usize::from(u16::MAX) || k > usize::from(u16::MAX) {
        return Err(Error::InvalidInput("too many folds or repetitions".into()));
    }
    if !(0.0..1.0).contains(&config.dev_fraction) {
        return Err(Error::InvalidInput("dev fraction must lie in [0, 1)".into()));
    }
    if n < 2 * k {
        return Err(Error::InvalidInput(format!(
            "{n} arguments are too few for {k} folds (need at least {})",
            2 * k
        )));
    }
    let rows = labels.rows();
    let ids = labels.ids();
    let everyone: Vec<usize> = (0..n).collect();
    let mut foldings = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let mut rng = rng::stream(config.seed, rng::stream_id(&[11, rep as u16]));
        let mut capacities = vec![n / k; k];
        let mut which: Vec<usize> = (0..k).collect();
        which.shuffle(&mut rng);
        for &j in which.iter().take(n % k) {
            capacities[j] += 1;
        }
        let tests = stratify(rows, &everyone, &capacities, &mut rng);
        let mut row = Vec::with_capacity(k);
        for (fold, test) in tests.iter().enumerate() {
            let in_test: HashSet<usize> = test.iter().copied().collect();
            let pool: Vec<usize> = everyone.iter().copied().filter(|i| !in_test.contains(i)).collect();
            let dev_size = dev_size(n, k, test.len(), config.dev_fraction);
            if dev_size >= pool.len() {
                return Err(Error::InvalidInput("no training data left after the dev split".into()));
            }
            let mut rng = rng::stream(config.seed, rng::stream_id(&[12, rep as u16, fold as u16]));
            let parts = stratify(rows, &pool, &[dev_size, pool.len() - dev_size], &mut rng);
            let name = |v: &[usize]| v.iter().map(|&i| ids[i].clone()).collect::<Vec<_>>();
            row.push(Folding {
                train: name(&parts[1]),
                dev: name(&parts[0]),
                test: name(test),
            });
        }
        foldings.push(row);
    }
    Ok(FoldPlan {
        seed: Some(config.seed),
        repetitions: config.repetitions,
        folds: k,
        foldings,
    })
}

/// Dev size closest to both its own target and the train target, given the
/// actual test size (each stays within one argument of its share).
fn dev_size(n: usize, k: usize, test: usize, fraction: f64) -> usize {
    let excess = test as f64 - n as f64 / k as f64;
    (fraction * n as f64 - excess / 2.0).round().max(0.0) as usize
}

impl FoldPlan {
    pub fn folding(&self, repetition: usize, fold: usize) -> &Folding {
        &self.foldings[repetition][fold]
    }

    /// `(repetition, fold, folding)` in protocol order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Folding)> {
        self.foldings
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(f, x)| (r, f, x)))
    }

    pub fn len(&self) -> usize {
        self.repetitions * self.folds
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that every repetition's test sets partition the same id set and
    /// that train, dev and test are disjoint and cover it in each folding.
    pub fn check(&self) -> Result<()> {
        let mut universe: Option<HashSet<&str>> = None;
        for (r, row) in self.foldings.iter().enumerate() {
            if row.len() != self.folds {
                return Err(Error::InvalidInput(format!(
                    "repetition {} has {} folds, expected {}",
                    r + 1,
                    row.len(),
                    self.folds
                )));
            }
            let mut seen: HashSet<&str> = HashSet::new();
            for (f, folding) in row.iter().enumerate() {
                for id in &folding.test {
                    if !seen.insert(id) {
                        return Err(Error::InvalidInput(format!(
                            "`{id}` is in two test sets of repetition {}",
                            r + 1
                        )));
                    }
                }
                let mut all: HashSet<&str> = HashSet::new();
                for id in folding.train.iter().chain(&folding.dev).chain(&folding.test) {
                    if !all.insert(id) {
                        return Err(Error::InvalidInput(format!(
                            "`{id}` is in two splits of repetition {} fold {}",
                            r + 1,
                            f + 1
                        )));
                    }
                }
                if let Some(u) = &universe {
                    if *u != all {
                        return Err(Error::InvalidInput(format!(
                            "repetition {} fold {} covers a different id set",
                            r + 1,
                            f + 1
                        )));
                    }
                } else {
                    universe = Some(all);
                }
            }
            if Some(&seen) != universe.as_ref() {
                return Err(Error::InvalidInput(format!(
                    "test sets of repetition {} do not cover the corpus",
                    r + 1
                )));
            }
        }
        Ok(())
    }

    /// Stable content hash of the assignments (FNV-1a over the TSV form),
    /// used to tell whether two score reports share a plan.
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::new();
        self.write_tsv(&mut bytes).expect("writing to memory");
        let hash = bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
            (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
        });
        format!("{hash:016x}")
    }

    /// TSV `repetition fold split argument_id`, 1-based indices, one row
    /// per assignment in protocol order.
    pub fn write_tsv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = tsv::writer(out);
        w.write_record(["repetition", "fold", "split", "argument_id"])?;
        for (r, f, folding) in self.iter() {
            let (r, f) = ((r + 1).to_string(), (f + 1).to_string());
            for (split, ids) in [
                (Split::Train, &folding.train),
                (Split::Dev, &folding.dev),
                (Split::Test, &folding.test),
            ] {
                for id in ids {
                    w.write_record([r.as_str(), f.as_str(), split.tag(), id.as_str()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_tsv<R: Read>(input: R) -> Result<Self> {
        let table = Table::read(input, &["repetition", "fold", "split", "argument_id"])?;
        let mut cells: BTreeMap<(usize, usize), Folding> = BTreeMap::new();
        for (line, row) in &table.rows {
            let line = *line;
            let index = |name: &str| -> Result<usize> {
                let v = table.field(line, row, name)?;
                match v.trim().parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(i - 1),
                    _ => Err(Error::parse(line, format!("`{name}` must be a positive integer, found `{v}`"))),
                }
            };
            let (r, f) = (index("repetition")?, index("fold")?);
            let id = table.field(line, row, "argument_id")?.to_string();
            let cell = cells.entry((r, f)).or_insert_with(|| Folding {
                train: Vec::new(),
                dev: Vec::new(),
                test: Vec::new(),
            });
            match table.field(line, row, "split")?.trim() {
                "train" => cell.train.push(id),
                "dev" => cell.dev.push(id),
                "test" => cell.test.push(id),
                other => return Err(Error::parse(line, format!("unknown split `{other}`"))),
            }
        }
        let repetitions = cells.keys().map(|k| k.0 + 1).max().unwrap_or(0);
        let folds = cells.keys().map(|k| k.1 + 1).max().unwrap_or(0);
        if repetitions == 0 || cells.len() != repetitions * folds {
            return Err(Error::InvalidInput("fold file does not describe a full plan".into()));
        }
        let mut foldings: Vec<Vec<Folding>> = vec![Vec::with_capacity(folds); repetitions];
        for ((r, _), folding) in cells {
            foldings[r].push(folding);
        }
        let plan = FoldPlan {
            seed: None,
            repetitions,
            folds,
            foldings,
        };
        plan.check()?;
        Ok(plan)
    }
}
