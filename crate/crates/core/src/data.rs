//! CSV ingestion, feature encoding, stratified folds and stratified batching.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairloss::ConstraintKind;
use crate::numcore::{Matrix, Rng};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub column: String,
    pub positive: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveSpec {
    pub column: String,
    pub protected: String,
}

/// Which columns to read and how to interpret them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(default)]
    pub numeric: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    pub label: LabelSpec,
    pub sensitive: SensitiveSpec,
    #[serde(default = "default_missing")]
    pub missing_token: String,
}

fn default_missing() -> String {
    "?".to_string()
}

impl SchemaConfig {
    /// UCI Adult census income: predict `>50K`, sex as the sensitive attribute.
    pub fn adult() -> Self {
        let s = |v: &[&str]| v.iter().map(|c| c.to_string()).collect();
        Self {
            numeric: s(&[
                "age",
                "education-num",
                "capital-gain",
                "capital-loss",
                "hours-per-week",
            ]),
            categorical: s(&[
                "workclass",
                "marital-status",
                "occupation",
                "relationship",
                "race",
                "native-country",
            ]),
            label: LabelSpec {
                column: "income".into(),
                positive: ">50K".into(),
            },
            sensitive: SensitiveSpec {
                column: "sex".into(),
                protected: "Female".into(),
            },
            missing_token: "?".into(),
        }
    }

    /// Numeric features plus a `y` label and `a` attribute, both coded `1`.
    pub fn generic(numeric: &[&str]) -> Self {
        Self {
            numeric: numeric.iter().map(|c| c.to_string()).collect(),
            categorical: Vec::new(),
            label: LabelSpec {
                column: "y".into(),
                positive: "1".into(),
            },
            sensitive: SensitiveSpec {
                column: "a".into(),
                protected: "1".into(),
            },
            missing_token: "NA".into(),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "adult" => Some(Self::adult()),
            "generic" => Some(Self::generic(&["x1", "x2"])),
            _ => None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(s)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn feature_columns(&self) -> impl Iterator<Item = &String> {
        self.numeric.iter().chain(&self.categorical)
    }

    /// Every column the schema reads.
    pub fn used_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = self.feature_columns().map(String::as_str).collect();
        for c in [&self.label.column, &self.sensitive.column] {
            if !cols.contains(&c.as_str()) {
                cols.push(c);
            }
        }
        cols
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in self.feature_columns() {
            if !seen.insert(c) {
                return Err(Error::Schema(format!("column {c} listed twice")));
            }
        }
        if seen.contains(&self.label.column) {
            return Err(Error::Schema(format!(
                "label column {} cannot also be a feature",
                self.label.column
            )));
        }
        if self.label.column == self.sensitive.column {
            return Err(Error::Schema("label and sensitive column coincide".into()));
        }
        Ok(())
    }
}

/// Rows of string cells as read from CSV, after dropping incomplete rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Rows removed because a used column held the missing-value token.
    pub dropped: usize,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("column {name} not found in header")))
    }

    pub fn select(&self, idx: &[usize]) -> RawTable {
        RawTable {
            columns: self.columns.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            dropped: 0,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.columns)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<RawTable> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &SchemaConfig) -> Result<RawTable> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut used = Vec::new();
    for name in schema.used_columns() {
        let i = columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("column {name} not found in header")))?;
        used.push(i);
    }
    let mut rows = Vec::new();
    let mut dropped = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let row: Vec<String> = rec.iter().map(str::to_string).collect();
        if used.iter().any(|&i| row[i] == schema.missing_token) {
            dropped += 1;
            continue;
        }
        rows.push(row);
    }
    Ok(RawTable {
        columns,
        rows,
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericStat {
    pub column: String,
    pub mean: f64,
    /// Population standard deviation; zero encodes the column as all zeros.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalVocab {
    pub column: String,
    /// Observed values, sorted; one output column each.
    pub values: Vec<String>,
}

/// Statistics fitted on a training split and replayed on any other split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub schema: SchemaConfig,
    pub numeric: Vec<NumericStat>,
    pub categorical: Vec<CategoricalVocab>,
    /// Sorted values of the sensitive column; index = multi-group id.
    pub groups: Vec<String>,
}

impl Encoder {
    pub fn fit(table: &RawTable, schema: &SchemaConfig, rows: &[usize]) -> Result<Self> {
        schema.validate()?;
        if rows.is_empty() {
            return Err(Error::Data("cannot fit an encoder on zero rows".into()));
        }
        let mut numeric = Vec::new();
        for name in &schema.numeric {
            let c = table.column_index(name)?;
            let vals = rows
                .iter()
                .map(|&r| parse_num(&table.rows[r][c], name))
                .collect::<Result<Vec<f64>>>()?;
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            numeric.push(NumericStat {
                column: name.clone(),
                mean,
                std: var.sqrt(),
            });
        }
        let mut categorical = Vec::new();
        for name in &schema.categorical {
            let c = table.column_index(name)?;
            let values: BTreeSet<&str> = rows.iter().map(|&r| table.rows[r][c].as_str()).collect();
            categorical.push(CategoricalVocab {
                column: name.clone(),
                values: values.into_iter().map(str::to_string).collect(),
            });
        }
        let sc = table.column_index(&schema.sensitive.column)?;
        let mut groups: BTreeSet<String> = table.rows.iter().map(|r| r[sc].clone()).collect();
        groups.insert(schema.sensitive.protected.clone());
        Ok(Self {
            schema: schema.clone(),
            numeric,
            categorical,
            groups: groups.into_iter().collect(),
        })
    }

    pub fn width(&self) -> usize {
        self.numeric.len()
            + self
                .categorical
                .iter()
                .map(|c| c.values.len())
                .sum::<usize>()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.numeric.iter().map(|s| s.column.clone()).collect();
        for cat in &self.categorical {
            for v in &cat.values {
                names.push(format!("{}={}", cat.column, v));
            }
        }
        names
    }

    pub fn transform(&self, table: &RawTable, rows: &[usize]) -> Result<Dataset> {
        let width = self.width();
        let num_idx = self
            .numeric
            .iter()
            .map(|s| table.column_index(&s.column))
            .collect::<Result<Vec<_>>>()?;
        let cat_idx = self
            .categorical
            .iter()
            .map(|c| table.column_index(&c.column))
            .collect::<Result<Vec<_>>>()?;
        let cat_lookup: Vec<HashMap<&str, usize>> = self
            .categorical
            .iter()
            .map(|c| {
                c.values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.as_str(), i))
                    .collect()
            })
            .collect();
        let lc = table.column_index(&self.schema.label.column)?;
        let sc = table.column_index(&self.schema.sensitive.column)?;
        let group_lookup: HashMap<&str, usize> = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i))
            .collect();

        let mut data = Vec::with_capacity(rows.len() * width);
        let mut a = Vec::with_capacity(rows.len());
        let mut y = Vec::with_capacity(rows.len());
        let mut group = Vec::with_capacity(rows.len());
        for &r in rows {
            let row = &table.rows[r];
            for (stat, &c) in self.numeric.iter().zip(&num_idx) {
                let v = parse_num(&row[c], &stat.column)?;
                data.push(if stat.std > 0.0 {
                    (v - stat.mean) / stat.std
                } else {
                    0.0
                });
            }
            for ((vocab, &c), lookup) in self.categorical.iter().zip(&cat_idx).zip(&cat_lookup) {
                let start = data.len();
                data.resize(start + vocab.values.len(), 0.0);
                // unseen categories stay all-zero
                if let Some(&k) = lookup.get(row[c].as_str()) {
                    data[start + k] = 1.0;
                }
            }
            y.push(row[lc] == self.schema.label.positive);
            let s = row[sc].as_str();
            a.push(s == self.schema.sensitive.protected);
            group.push(*group_lookup.get(s).ok_or_else(|| {
                Error::Data(format!(
                    "sensitive value {s} unseen when the encoder was fitted"
                ))
            })?);
        }
        Ok(Dataset {
            x: Matrix::from_vec(rows.len(), width, data)?,
            a,
            y,
            group,
            n_groups: self.groups.len(),
            feature_names: self.feature_names(),
            encoder: self.clone(),
        })
    }
}

fn parse_num(s: &str, column: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Data(format!("column {column}: cannot parse {s:?} as a number")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!(
            "column {column}: non-finite value {s:?}"
        )));
    }
    Ok(v)
}

/// Encoded features with binary attribute, binary label and multi-group ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub a: Vec<bool>,
    pub y: Vec<bool>,
    pub group: Vec<usize>,
    pub n_groups: usize,
    pub feature_names: Vec<String>,
    pub encoder: Encoder,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.gather_rows(idx),
            a: idx.iter().map(|&i| self.a[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            group: idx.iter().map(|&i| self.group[i]).collect(),
            n_groups: self.n_groups,
            feature_names: self.feature_names.clone(),
            encoder: self.encoder.clone(),
        }
    }

    /// Counts of (unprotected, protected) and (negative, positive).
    pub fn group_class_counts(&self) -> ([usize; 2], [usize; 2]) {
        let mut g = [0; 2];
        let mut c = [0; 2];
        for (&a, &y) in self.a.iter().zip(&self.y) {
            g[a as usize] += 1;
            c[y as usize] += 1;
        }
        (g, c)
    }

    /// Errors unless both groups and both classes are present.
    pub fn check_groups_and_classes(&self) -> Result<()> {
        let (g, c) = self.group_class_counts();
        if g.contains(&0) || c.contains(&0) {
            return Err(Error::Data(format!(
                "dataset needs both groups and both classes (groups {g:?}, classes {c:?})"
            )));
        }
        Ok(())
    }

    /// Writes the encoder as JSON and the encoded matrix (plus a, y, group) as CSV.
    pub fn write_cache(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("encoder.json"),
            serde_json::to_string_pretty(&self.encoder)?,
        )?;
        let mut wr = csv::Writer::from_path(dir.join("matrix.csv"))?;
        let mut header = self.feature_names.clone();
        header.extend(["a".into(), "y".into(), "group".into()]);
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.x.row(i).iter().map(|v| v.to_string()).collect();
            rec.push((self.a[i] as u8).to_string());
            rec.push((self.y[i] as u8).to_string());
            rec.push(self.group[i].to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_cache(dir: impl AsRef<Path>) -> Result<Dataset> {
        let dir = dir.as_ref();
        let encoder: Encoder =
            serde_json::from_str(&std::fs::read_to_string(dir.join("encoder.json"))?)?;
        let width = encoder.width();
        let mut rdr = csv::Reader::from_path(dir.join("matrix.csv"))?;
        let (mut data, mut a, mut y, mut group) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != width + 3 {
                return Err(Error::Schema(format!(
                    "cache row has {} fields, encoder expects {}",
                    rec.len(),
                    width + 3
                )));
            }
            for f in rec.iter().take(width) {
                data.push(parse_num(f, "cache")?);
            }
            a.push(&rec[width] == "1");
            y.push(&rec[width + 1] == "1");
            group.push(
                rec[width + 2]
                    .parse()
                    .map_err(|_| Error::Data("bad group id in cache".into()))?,
            );
        }
        Ok(Dataset {
            x: Matrix::from_vec(y.len(), width, data)?,
            a,
            y,
            group,
            n_groups: encoder.groups.len(),
            feature_names: encoder.feature_names(),
            encoder,
        })
    }
}

/// Fits the encoder on every row and encodes the whole table.
pub fn encode(table: &RawTable, schema: &SchemaConfig) -> Result<Dataset> {
    if table.is_empty() {
        return Err(Error::Data("table has no rows".into()));
    }
    let all: Vec<usize> = (0..table.len()).collect();
    Encoder::fit(table, schema, &all)?.transform(table, &all)
}

/// `k` disjoint index lists covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub folds: Vec<Vec<usize>>,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// (train, test) indices with fold `i` held out; both sorted.
    pub fn split(&self, i: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        train.sort_unstable();
        let mut test = self.folds[i].clone();
        test.sort_unstable();
        (train, test)
    }
}

/// Folds stratified on the joint (attribute, label) cell.
pub fn kfold(a: &[bool], y: &[bool], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Parameter(format!("need at least 2 folds, got {k}")));
    }
    if a.len() != y.len() {
        return Err(Error::Shape("attribute and label lengths differ".into()));
    }
    let mut rng = Rng::new(seed);
    // Cell order keeps each group and each class contiguous (cyclically) so
    // round-robin dealing spreads both marginals over all folds.
    let order = [(false, false), (false, true), (true, true), (true, false)];
    let mut dealt = Vec::with_capacity(a.len());
    for (ca, cy) in order {
        let mut cell: Vec<usize> = (0..a.len()).filter(|&i| a[i] == ca && y[i] == cy).collect();
        rng.shuffle(&mut cell);
        dealt.extend(cell);
    }
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in dealt.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for (f, idx) in folds.iter().enumerate() {
        let has = |pred: &dyn Fn(usize) -> bool| idx.iter().any(|&i| pred(i));
        if !(has(&|i| a[i]) && has(&|i| !a[i]) && has(&|i| y[i]) && has(&|i| !y[i])) {
            return Err(Error::Data(format!(
                "fold {f} lacks a group or class; too few members for {k} folds"
            )));
        }
    }
    Ok(FoldSplit { folds })
}

/// Which categories every batch must contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BatchNeeds {
    /// Both values of the binary attribute.
    pub groups: bool,
    /// Every multi-group id.
    pub all_groups: bool,
    /// Both label values.
    pub classes: bool,
}

impl BatchNeeds {
    pub fn for_training(constraint: Option<&ConstraintKind>, needs_classes: bool) -> Self {
        Self {
            groups: constraint.is_some(),
            all_groups: constraint.is_some_and(ConstraintKind::is_multi_group),
            classes: needs_classes,
        }
    }

    /// Everything the auditor may compute.
    pub fn audit() -> Self {
        Self {
            groups: true,
            all_groups: false,
            classes: true,
        }
    }
}

/// Emits one epoch of fixed-size stratified batches per call.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    a: Vec<bool>,
    y: Vec<bool>,
    group: Vec<usize>,
    n_groups: usize,
    size: usize,
    needs: BatchNeeds,
    rng: Rng,
}

pub fn batch_iter(
    dataset: &Dataset,
    size: usize,
    seed: u64,
    needs: BatchNeeds,
) -> Result<BatchSampler> {
    BatchSampler::new(
        dataset.a.clone(),
        dataset.y.clone(),
        dataset.group.clone(),
        dataset.n_groups,
        size,
        seed,
        needs,
    )
}

impl BatchSampler {
    pub fn new(
        a: Vec<bool>,
        y: Vec<bool>,
        group: Vec<usize>,
        n_groups: usize,
        size: usize,
        seed: u64,
        needs: BatchNeeds,
    ) -> Result<Self> {
        if size < 2 {
            return Err(Error::Parameter(format!(
                "batch size must be >= 2, got {size}"
            )));
        }
        if a.len() < size {
            return Err(Error::Data(format!(
                "batch size {size} exceeds the {} available rows",
                a.len()
            )));
        }
        let s = Self {
            a,
            y,
            group,
            n_groups,
            size,
            needs,
            rng: Rng::new(seed),
        };
        for dim in s.dims() {
            for v in 0..s.dim_arity(dim) {
                if !(0..s.a.len()).any(|i| s.tag(dim, i) == v) {
                    return Err(Error::Data(format!(
                        "no rows with {} = {v}; stratified batches impossible",
                        dim.name()
                    )));
                }
            }
        }
        Ok(s)
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.a.len().div_ceil(self.size)
    }

    fn dims(&self) -> Vec<Dim> {
        let mut d = Vec::new();
        if self.needs.groups {
            d.push(Dim::Attr);
        }
        if self.needs.all_groups {
            d.push(Dim::Group);
        }
        if self.needs.classes {
            d.push(Dim::Label);
        }
        d
    }

    fn dim_arity(&self, dim: Dim) -> usize {
        match dim {
            Dim::Attr | Dim::Label => 2,
            Dim::Group => self.n_groups,
        }
    }

    fn tag(&self, dim: Dim, i: usize) -> usize {
        match dim {
            Dim::Attr => self.a[i] as usize,
            Dim::Label => self.y[i] as usize,
            Dim::Group => self.group[i],
        }
    }

    pub fn next_epoch(&mut self) -> Vec<Vec<usize>> {
        let n = self.a.len();
        // Spread each (group, label) cell evenly over the epoch order:
        // member j of a cell with n_c members sits at (j + u_c) / n_c.
        let mut cells: BTreeMap<(usize, bool), Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            cells.entry((self.group[i], self.y[i])).or_default().push(i);
        }
        let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(n);
        for members in cells.values_mut() {
            self.rng.shuffle(members);
            let u = self.rng.uniform();
            let nc = members.len() as f64;
            keyed.extend(
                members
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| ((j as f64 + u) / nc, i)),
            );
        }
        keyed.sort_by(|x, y| x.0.total_cmp(&y.0));
        let order: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();

        let mut batches: Vec<Vec<usize>> = order.chunks(self.size).map(<[usize]>::to_vec).collect();
        if let Some(last) = batches.last_mut() {
            if last.len() < self.size {
                let in_last: BTreeSet<usize> = last.iter().copied().collect();
                let mut pool: Vec<usize> = (0..n).filter(|i| !in_last.contains(i)).collect();
                self.rng.shuffle(&mut pool);
                let missing = self.size - last.len();
                last.extend_from_slice(&pool[..missing]);
            }
        }
        self.repair(&mut batches);
        batches
    }

    fn counts(&self, batch: &[usize], dim: Dim) -> Vec<usize> {
        let mut c = vec![0; self.dim_arity(dim)];
        for &i in batch {
            c[self.tag(dim, i)] += 1;
        }
        c
    }

    /// Whether `i` can leave `batch` without emptying any required category.
    fn removable(&self, batch: &[usize], i: usize) -> bool {
        self.dims()
            .into_iter()
            .all(|d| self.counts(batch, d)[self.tag(d, i)] >= 2)
    }

    fn first_gap(&self, batch: &[usize]) -> Option<(Dim, usize)> {
        for d in self.dims() {
            if let Some(v) = self.counts(batch, d).iter().position(|&c| c == 0) {
                return Some((d, v));
            }
        }
        None
    }

    /// Swaps members between batches until each batch holds every required
    /// category. Falls back to duplicating a row when the category has
    /// fewer members than there are batches.
    fn repair(&mut self, batches: &mut [Vec<usize>]) {
        for b1 in 0..batches.len() {
            while let Some((dim, v)) = self.first_gap(&batches[b1]) {
                let mut swapped = false;
                'search: for b2 in 0..batches.len() {
                    if b2 == b1 {
                        continue;
                    }
                    for (pe, &e) in batches[b2].iter().enumerate() {
                        if self.tag(dim, e) != v || !self.removable(&batches[b2], e) {
                            continue;
                        }
                        let pf = batches[b1]
                            .iter()
                            .position(|&f| self.removable(&batches[b1], f));
                        if let Some(pf) = pf {
                            let f = batches[b1][pf];
                            batches[b1][pf] = e;
                            batches[b2][pe] = f;
                            swapped = true;
                            break 'search;
                        }
                    }
                }
                if !swapped {
                    let donors: Vec<usize> = (0..self.a.len())
                        .filter(|&i| self.tag(dim, i) == v)
                        .collect();
                    let e = donors[self.rng.below(donors.len())];
                    let pf = batches[b1]
                        .iter()
                        .position(|&f| self.removable(&batches[b1], f))
                        .unwrap_or(0);
                    batches[b1][pf] = e;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Attr,
    Group,
    Label,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Attr => "attribute",
            Dim::Group => "group",
            Dim::Label => "label",
        }
    }
}
