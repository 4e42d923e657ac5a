//! Versioned binary model container: 4-byte magic `LFMD`, u16 version,
//! u8 classifier tag, then the classifier payload, all little-endian.

use std::fs;
use std::path::Path;

use landfuse_core::classify::forest::{ForestModel, Node, Tree};
use landfuse_core::classify::rbfnn::RbfnnModel;
use landfuse_core::classify::svm::{BinarySvm, SvmModel};
use landfuse_core::classify::ClassifierKind;
use landfuse_core::linalg::Matrix;

use crate::error::{CliError, Result};

const MAGIC: &[u8; 4] = b"LFMD";
const VERSION: u16 = 1;

const TAG_SVM: u8 = 1;
const TAG_FOREST: u8 = 2;
const TAG_RBFNN: u8 = 3;

/// A trained model of any kind.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Svm(SvmModel),
    Forest(ForestModel),
    Rbfnn(RbfnnModel),
}

impl AnyModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            AnyModel::Svm(_) => ClassifierKind::Svm,
            AnyModel::Forest(_) => ClassifierKind::RandomForest,
            AnyModel::Rbfnn(_) => ClassifierKind::Rbfnn,
        }
    }

    pub fn num_classes(&self) -> u16 {
        match self {
            AnyModel::Svm(m) => m.num_classes,
            AnyModel::Forest(m) => m.num_classes,
            AnyModel::Rbfnn(m) => m.num_classes,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<u16> {
        match self {
            AnyModel::Svm(m) => landfuse_core::classify::svm::predict(m, x),
            AnyModel::Forest(m) => landfuse_core::classify::forest::predict(m, x),
            AnyModel::Rbfnn(m) => landfuse_core::classify::rbfnn::predict(m, x),
        }
    }
}

struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    fn new() -> Self {
        ByteWriter { buf: Vec::new() }
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn matrix(&mut self, m: &Matrix) {
        self.u32(m.rows() as u32);
        self.u32(m.cols() as u32);
        for &v in m.data() {
            self.f64(v);
        }
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.buf.len() {
            return Err(CliError::data(format!(
                "{}: truncated model file",
                self.path.display()
            )));
        }
        let slice = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(slice)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
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
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn matrix(&mut self) -> Result<Matrix> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.f64()?);
        }
        Matrix::from_vec(rows, cols, data)
            .map_err(|e| CliError::data(format!("{}: {e}", self.path.display())))
    }
}

pub fn write_model(path: &Path, model: &AnyModel) -> Result<()> {
    let mut w = ByteWriter::new();
    w.buf.extend_from_slice(MAGIC);
    w.u16(VERSION);
    match model {
        AnyModel::Svm(m) => {
            w.u8(TAG_SVM);
            w.f64(m.c);
            w.f64(m.gamma);
            w.u16(m.num_classes);
            w.f64(m.cv_accuracy);
            w.u8(u8::from(m.converged));
            w.u32(m.machines.len() as u32);
            for machine in &m.machines {
                w.u16(machine.class_pos);
                w.u16(machine.class_neg);
                w.f64(machine.bias);
                w.u8(u8::from(machine.converged));
                w.matrix(&machine.support_vectors);
                w.u32(machine.coefficients.len() as u32);
                for &c in &machine.coefficients {
                    w.f64(c);
                }
            }
        }
        AnyModel::Forest(m) => {
            w.u8(TAG_FOREST);
            w.u16(m.num_classes);
            w.u32(m.dimension as u32);
            w.u32(m.trees.len() as u32);
            for &seed in &m.seeds {
                w.u64(seed);
            }
            for tree in &m.trees {
                w.u32(tree.nodes.len() as u32);
                for node in &tree.nodes {
                    match node {
                        Node::Split { feature, threshold, left, right } => {
                            w.u8(0);
                            w.u32(*feature);
                            w.f64(*threshold);
                            w.u32(*left);
                            w.u32(*right);
                        }
                        Node::Leaf { counts } => {
                            w.u8(1);
                            w.u32(counts.len() as u32);
                            for &c in counts {
                                w.u32(c);
                            }
                        }
                    }
                }
            }
        }
        AnyModel::Rbfnn(m) => {
            w.u8(TAG_RBFNN);
            w.u16(m.num_classes);
            w.matrix(&m.centers);
            w.u32(m.widths.len() as u32);
            for &width in &m.widths {
                w.f64(width);
            }
            w.matrix(&m.weights);
        }
    }
    fs::write(path, &w.buf).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<AnyModel> {
    let bytes =
        fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut r = ByteReader { buf: &bytes, at: 0, path };
    if r.take(4)? != MAGIC {
        return Err(CliError::data(format!("{}: not a model file", path.display())));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(CliError::data(format!(
            "{}: unsupported model version {version}",
            path.display()
        )));
    }
    let tag = r.u8()?;
    match tag {
        TAG_SVM => {
            let c = r.f64()?;
            let gamma = r.f64()?;
            let num_classes = r.u16()?;
            let cv_accuracy = r.f64()?;
            let converged = r.u8()? != 0;
            let count = r.u32()? as usize;
            let mut machines = Vec::with_capacity(count);
            for _ in 0..count {
                let class_pos = r.u16()?;
                let class_neg = r.u16()?;
                let bias = r.f64()?;
                let m_converged = r.u8()? != 0;
                let support_vectors = r.matrix()?;
                let n = r.u32()? as usize;
                let mut coefficients = Vec::with_capacity(n);
                for _ in 0..n {
                    coefficients.push(r.f64()?);
                }
                machines.push(BinarySvm {
                    class_pos,
                    class_neg,
                    support_vectors,
                    coefficients,
                    bias,
                    converged: m_converged,
                });
            }
            Ok(AnyModel::Svm(SvmModel { c, gamma, num_classes, machines, cv_accuracy, converged }))
        }
        TAG_FOREST => {
            let num_classes = r.u16()?;
            let dimension = r.u32()? as usize;
            let tree_count = r.u32()? as usize;
            let mut seeds = Vec::with_capacity(tree_count);
            for _ in 0..tree_count {
                seeds.push(r.u64()?);
            }
            let mut trees = Vec::with_capacity(tree_count);
            for _ in 0..tree_count {
                let node_count = r.u32()? as usize;
                let mut nodes = Vec::with_capacity(node_count);
                for _ in 0..node_count {
                    match r.u8()? {
                        0 => nodes.push(Node::Split {
                            feature: r.u32()?,
                            threshold: r.f64()?,
                            left: r.u32()?,
                            right: r.u32()?,
                        }),
                        1 => {
                            let k = r.u32()? as usize;
                            let mut counts = Vec::with_capacity(k);
                            for _ in 0..k {
                                counts.push(r.u32()?);
                            }
                            nodes.push(Node::Leaf { counts });
                        }
                        other => {
                            return Err(CliError::data(format!(
                                "{}: unknown node tag {other}",
                                path.display()
                            )))
                        }
                    }
                }
                trees.push(Tree { nodes });
            }
            Ok(AnyModel::Forest(ForestModel { num_classes, dimension, trees, seeds }))
        }
        TAG_RBFNN => {
            let num_classes = r.u16()?;
            let centers = r.matrix()?;
            let n = r.u32()? as usize;
            let mut widths = Vec::with_capacity(n);
            for _ in 0..n {
                widths.push(r.f64()?);
            }
            let weights = r.matrix()?;
            Ok(AnyModel::Rbfnn(RbfnnModel { centers, widths, weights, num_classes }))
        }
        other => Err(CliError::data(format!(
            "{}: unknown classifier tag {other}",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use landfuse_core::classify::{forest, rbfnn, svm, TrainingSet};
    use landfuse_core::seed::stage_rng;
    use rand::Rng;
    use tempfile::tempdir;

    fn small_set() -> TrainingSet {
        let mut rng = stage_rng(111, "test-model-io", 0);
        let n = 30;
        let x = Matrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<u16> = (0..n).map(|i| 1 + u16::from(x.get(i, 0) > 0.0)).collect();
        TrainingSet::new(x, y, 2).unwrap()
    }

    #[test]
    fn svm_round_trip_predicts_identically() {
        let set = small_set();
        let model = svm::train(&set, &svm::SvmParams::fixed(4.0, 1.0), 1).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.lfm");
        write_model(&path, &AnyModel::Svm(model.clone())).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back.predict(set.features()), svm::predict(&model, set.features()));
    }

    #[test]
    fn forest_serialization_is_seed_stable() {
        let set = small_set();
        let params = forest::ForestParams { trees: 8, ..forest::ForestParams::default() };
        let a = forest::train(&set, &params, 99).unwrap();
        let b = forest::train(&set, &params, 99).unwrap();
        let dir = tempdir().unwrap();
        let pa = dir.path().join("a.lfm");
        let pb = dir.path().join("b.lfm");
        write_model(&pa, &AnyModel::Forest(a)).unwrap();
        write_model(&pb, &AnyModel::Forest(b)).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }

    #[test]
    fn rbfnn_round_trip_predicts_identically() {
        let set = small_set();
        let params = rbfnn::RbfnnParams { centers_per_class: 2, ..rbfnn::RbfnnParams::default() };
        let model = rbfnn::train(&set, &params, 2).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.lfm");
        write_model(&path, &AnyModel::Rbfnn(model.clone())).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back.predict(set.features()), rbfnn::predict(&model, set.features()));
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.lfm");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(read_model(&path).is_err());
        let set = small_set();
        let model = svm::train(&set, &svm::SvmParams::fixed(1.0, 1.0), 1).unwrap();
        write_model(&path, &AnyModel::Svm(model)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(read_model(&path).unwrap_err().to_string().contains("truncated"));
    }
}
