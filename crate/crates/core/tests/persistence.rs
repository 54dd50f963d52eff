mod common;

use common::anisotropic;
use tailbound::index::{HnswParams, SearchMode, SearchOptions};
use tailbound::io::{self, VecFormat};
use tailbound::persist::{self, AnyIndex};
use tailbound::transform::{train_transform, TrainConfig};
use tailbound::{FlatIndex, HnswIndex, IvfFlatIndex, LevelSpec, VectorSet};

fn bits(v: &VectorSet) -> Vec<u32> {
    v.as_slice().iter().map(|x| x.to_bits()).collect()
}

#[test]
fn vector_files_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut data = anisotropic(50, 7, 3.0, 1);
    let mut raw = data.clone().into_inner();
    raw[3] = -0.0;
    raw[4] = f32::MIN_POSITIVE / 2.0;
    data = VectorSet::new(7, raw).unwrap();
    let f = dir.path().join("x.fvecs");
    io::write_fvecs(&f, &data).unwrap();
    assert_eq!(bits(&io::read_vectors(&f, VecFormat::Fvecs).unwrap()), bits(&data));
    assert_eq!(VecFormat::from_path(&f), Some(VecFormat::Fvecs));

    let ids = vec![vec![1, -2, 3], vec![i32::MAX, 0, i32::MIN]];
    let g = dir.path().join("gt.ivecs");
    io::write_ivecs(&g, &ids).unwrap();
    assert_eq!(io::read_ivecs(&g).unwrap(), ids);

    let bytes = VectorSet::from_rows(3, [[0.0, 17.0, 255.0], [1.0, 2.0, 3.0]]).unwrap();
    let b = dir.path().join("x.bvecs");
    io::write_bvecs(&b, &bytes).unwrap();
    assert_eq!(io::read_vectors(&b, VecFormat::Bvecs).unwrap(), bytes);
    assert!(io::read_vectors(dir.path().join("missing.fvecs"), VecFormat::Fvecs).is_err());
}

#[test]
fn trained_transform_round_trips() {
    let data = anisotropic(600, 12, 5.0, 2);
    let (model, _) = train_transform(&data, &TrainConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.pnrm");
    persist::save_transform(&path, &model).unwrap();
    let back = persist::load_transform(&path).unwrap();
    assert_eq!(back.matrix(), model.matrix());
    assert_eq!(back.warm_start(), model.warm_start());
    assert_eq!(persist::encode_transform(&back), persist::encode_transform(&model));
    assert!(back.orthogonality_error() <= 1e-4);
    assert_eq!(bits(&back.apply_all(&data).unwrap()), bits(&model.apply_all(&data).unwrap()));
}

#[test]
fn indexes_round_trip_and_search_identically() {
    let data = anisotropic(800, 16, 5.0, 3);
    let queries = anisotropic(5, 16, 5.0, 4);
    let (model, _) = train_transform(&data, &TrainConfig::default()).unwrap();
    let levels = LevelSpec::equal_width(16, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = SearchOptions::new(5, SearchMode::Pruned);

    let flat = FlatIndex::build(&data, Some(model.clone()), levels.clone(), 64).unwrap();
    let p = dir.path().join("f.idx");
    persist::save_flat(&p, &flat).unwrap();
    let AnyIndex::Flat(flat2) = persist::load_index(&p).unwrap() else { panic!("wrong kind") };
    assert_eq!(persist::encode_flat(&flat2).unwrap(), persist::encode_flat(&flat).unwrap());

    let ivf = IvfFlatIndex::build(&data, None, levels.clone(), 6, 5, 32).unwrap();
    let p = dir.path().join("i.idx");
    persist::save_ivf(&p, &ivf).unwrap();
    let AnyIndex::Ivf(ivf2) = persist::load_index(&p).unwrap() else { panic!("wrong kind") };
    assert_eq!(persist::encode_ivf(&ivf2).unwrap(), persist::encode_ivf(&ivf).unwrap());
    assert_eq!(ivf2.assignment(), ivf.assignment());

    let params = HnswParams { m: 8, ef_construction: 32, seed: 1 };
    let hnsw = HnswIndex::build(&data, Some(model), levels, params).unwrap();
    let p = dir.path().join("h.idx");
    persist::save_hnsw(&p, &hnsw).unwrap();
    let AnyIndex::Hnsw(hnsw2) = persist::load_index(&p).unwrap() else { panic!("wrong kind") };
    assert_eq!(persist::encode_hnsw(&hnsw2).unwrap(), persist::encode_hnsw(&hnsw).unwrap());

    for q in queries.rows() {
        assert_eq!(&flat2.search(q, &opts).unwrap().ids(), &flat.search(q, &opts).unwrap().ids());
        assert_eq!(&ivf2.search(q, 3, &opts).unwrap().ids(), &ivf.search(q, 3, &opts).unwrap().ids());
        assert_eq!(&hnsw2.search(q, 20, &opts).unwrap().ids(), &hnsw.search(q, 20, &opts).unwrap().ids());
    }
}

#[test]
fn damaged_files_are_rejected() {
    let data = anisotropic(100, 8, 5.0, 5);
    let flat = FlatIndex::build(&data, None, LevelSpec::default_for(8).unwrap(), 16).unwrap();
    let bytes = persist::encode_flat(&flat).unwrap();
    assert!(persist::decode_flat(&bytes[..bytes.len() - 3]).is_err());
    assert!(persist::decode_ivf(&bytes).is_err());
    let mut bad = bytes.clone();
    bad[5] = 9;
    assert!(persist::decode_flat(&bad).is_err());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("junk");
    std::fs::write(&p, b"hello world").unwrap();
    assert!(persist::load_index(&p).is_err());
}
