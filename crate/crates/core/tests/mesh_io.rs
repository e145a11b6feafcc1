use meanfield_core::geometry::{OuterBoundary, PiercedDomainSpec};
use meanfield_core::mesh::build_mesh;
use meanfield_core::mesh_io::{load_mesh, save_mesh};

#[test]
fn files_round_trip_for_disk_and_polygon() {
    let dir = tempfile::tempdir().unwrap();
    let hexagon = OuterBoundary::Polygon {
        vertices: (0..6)
            .map(|k| {
                let t = k as f64 * std::f64::consts::PI / 3.0;
                [t.cos(), t.sin()]
            })
            .collect(),
    };
    let specs = [
        PiercedDomainSpec::new(OuterBoundary::unit_disk(), [0.3, -0.1], 0.02, None).unwrap(),
        PiercedDomainSpec::new(hexagon, [0.0, 0.0], 0.05, Some(3)).unwrap(),
    ];
    for (i, spec) in specs.iter().enumerate() {
        let mesh = build_mesh(spec, 0.1, 0.3).unwrap();
        let a: Vec<f64> = mesh.vertices().iter().map(|p| p[0].exp() * 1e-7).collect();
        let b: Vec<f64> = mesh.vertices().iter().map(|p| -p[1] / 3.0).collect();
        let path = dir.path().join(format!("m{i}.mesh"));
        save_mesh(&path, &mesh, &[("a", &a), ("b", &b)]).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.mesh.vertices(), mesh.vertices());
        assert_eq!(back.mesh.triangles(), mesh.triangles());
        assert_eq!(back.mesh.tags(), mesh.tags());
        assert_eq!(back.mesh.symmetry(), mesh.symmetry());
        assert_eq!(back.values_named("a").unwrap(), a.as_slice());
        assert_eq!(back.values_named("b").unwrap(), b.as_slice());
        assert!(back.values_named("c").is_none());
    }
}

#[test]
fn header_documents_sections() {
    let spec = PiercedDomainSpec::centered_unit_disk(0.1, None).unwrap();
    let mesh = build_mesh(&spec, 0.2, 0.5).unwrap();
    let mut buf = Vec::new();
    meanfield_core::mesh_io::write_mesh(&mut buf, &mesh, &[]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let heads: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with(|c: char| c.is_ascii_alphabetic()))
        .map(|l| l.split(' ').next().unwrap())
        .collect();
    assert_eq!(heads, ["vertices", "triangles", "hole"]);
    assert!(text.lines().nth(1).unwrap().ends_with(" hole"));
}

#[test]
fn mismatched_value_length_is_rejected() {
    let spec = PiercedDomainSpec::centered_unit_disk(0.1, None).unwrap();
    let mesh = build_mesh(&spec, 0.2, 0.5).unwrap();
    let mut buf = Vec::new();
    assert!(meanfield_core::mesh_io::write_mesh(&mut buf, &mesh, &[("u", &[1.0, 2.0])]).is_err());
}
