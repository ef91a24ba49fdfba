"""End-to-end tests of the command line."""

import json

import pandas as pd
import pytest

from ecctopo.cli import (
    EXIT_BAD_INPUT,
    EXIT_BAD_OUTPUT,
    EXIT_OK,
    EXIT_UNKNOWN_CONTROL,
    RunConfig,
    main,
)
from ecctopo.ecc import read_features
from ecctopo.molio import graph_to_dict, parse_smiles

SMALL = ['--top-k', '4', '--chain-samples', '8', '--chain-walk-len', '4', '--pad-to', '48']


@pytest.fixture
def smiles_file(tmp_path):
    path = tmp_path / 'in.smi'
    path.write_text('CCO ethanol\nc1ccccc1 benzene\nC1CC broken\n')
    return path


# ==================== FEATURIZE ====================

def test_featurize_skips_bad_molecules(tmp_path, smiles_file):
    out = tmp_path / 'out' / 'features.ecc'
    assert main(['featurize', '--input', str(smiles_file), '--out', str(out)] + SMALL) == EXIT_OK
    records = read_features(out)
    assert [mol_id for mol_id, _ in records] == ['ethanol', 'benzene']
    assert all(values.shape == (48,) for _, values in records)

    config = json.loads((tmp_path / 'out' / 'features.ecc.config.json').read_text())
    assert config['pad_to'] == 48 and config['top_k'] == 4
    mirror = json.loads((tmp_path / 'out' / 'features.ecc.json').read_text())
    assert [r['id'] for r in mirror['records']] == ['ethanol', 'benzene']

    report = (tmp_path / 'out' / 'features.ecc_featurize_report.md').read_text()
    assert '"failed": 1' in report
    assert 'SmilesSyntaxError' in report
    log = (tmp_path / 'out' / 'features.ecc_featurize_log.txt').read_text()
    assert 'broken' in log


def test_featurize_survives_impossible_charge(tmp_path):
    path = tmp_path / 'charged.smi'
    path.write_text('C methane\n[C+7] overcharged\nc1ccccc1 benzene\n')
    out = tmp_path / 'features.ecc'
    assert main(['featurize', '--input', str(path), '--out', str(out)] + SMALL) == EXIT_OK
    assert [mol_id for mol_id, _ in read_features(out)] == ['methane', 'benzene']
    report = (tmp_path / 'features.ecc_featurize_report.md').read_text()
    assert '"failed": 1' in report


def test_featurize_graph_file_with_impossible_charge(tmp_path):
    good = tmp_path / 'good.json'
    good.write_text(json.dumps(graph_to_dict(parse_smiles('CC'))))
    bad = tmp_path / 'bad.json'
    bad.write_text(json.dumps({'atoms': [{'element': 'C', 'charge': 100}], 'bonds': []}))
    out = tmp_path / 'graphs.ecc'
    args = ['featurize', '--input', str(good), str(bad), '--kind', 'graph-files',
            '--out', str(out)]
    assert main(args + SMALL) == EXIT_OK
    assert len(read_features(out)) == 1


def test_featurize_empty_input(tmp_path):
    empty = tmp_path / 'empty.smi'
    empty.write_text('')
    out = tmp_path / 'empty.ecc'
    assert main(['featurize', '--input', str(empty), '--out', str(out)]) == EXIT_OK
    assert read_features(out) == []


def test_featurize_parallel_matches_serial(tmp_path, data_dir):
    corpus = str(data_dir / 'molecules.smi')
    serial, parallel = tmp_path / 'serial.ecc', tmp_path / 'parallel.ecc'
    assert main(['featurize', '--input', corpus, '--out', str(serial)] + SMALL) == EXIT_OK
    assert main(['featurize', '--input', corpus, '--out', str(parallel), '--jobs', '2']
                + SMALL) == EXIT_OK
    assert serial.read_bytes() == parallel.read_bytes()
    assert len(read_features(serial)) == 50


def test_featurize_max_molecules(tmp_path, data_dir):
    out = tmp_path / 'sub.ecc'
    args = ['featurize', '--input', str(data_dir / 'molecules.smi'), '--out', str(out),
            '--max-molecules', '5'] + SMALL
    assert main(args) == EXIT_OK
    assert len(read_features(out)) == 5


def test_featurize_graph_files(tmp_path):
    graphs = tmp_path / 'graphs'
    graphs.mkdir()
    for name, smiles in (('a_ethanol', 'CCO'), ('b_benzene', 'c1ccccc1')):
        (graphs / f'{name}.json').write_text(json.dumps(graph_to_dict(parse_smiles(smiles))))
    (graphs / 'c_bad.json').write_text('{"atoms": [{"element": "Zz"}]}')
    out = tmp_path / 'graphs.ecc'
    args = ['featurize', '--input', str(graphs), '--kind', 'graph-files', '--out', str(out)]
    assert main(args + SMALL) == EXIT_OK
    assert [mol_id for mol_id, _ in read_features(out)] == ['a_ethanol', 'b_benzene']


def test_featurize_missing_input(tmp_path):
    args = ['featurize', '--input', str(tmp_path / 'nope.smi'), '--out', str(tmp_path / 'o.ecc')]
    assert main(args) == EXIT_BAD_INPUT


def test_featurize_unwritable_output(tmp_path, smiles_file):
    blocker = tmp_path / 'blocker'
    blocker.write_text('not a directory')
    args = ['featurize', '--input', str(smiles_file), '--out', str(blocker / 'o.ecc')]
    assert main(args) == EXIT_BAD_OUTPUT


def test_featurize_invalid_config(tmp_path, smiles_file, capsys):
    args = ['featurize', '--input', str(smiles_file), '--out', str(tmp_path / 'o.ecc'),
            '--pad-to', '10']
    assert main(args) == EXIT_BAD_INPUT
    assert 'invalid configuration' in capsys.readouterr().err


def test_run_config_validation(tmp_path):
    with pytest.raises(ValueError):
        RunConfig(inputs=(tmp_path,), out=tmp_path / 'o.ecc', jobs=0)
    with pytest.raises(ValueError):
        RunConfig(inputs=(tmp_path,), out=tmp_path / 'o.ecc', kind='sdf')


# ==================== STATS ====================

def test_stats_writes_tables(tmp_path, data_dir, capsys):
    out = tmp_path / 'stats'
    args = ['stats', '--input', str(data_dir / 'fold_losses.csv'), '--control', 'ECC',
            '--out', str(out)]
    assert main(args) == EXIT_OK
    for kind in ('mae', 'rmse'):
        frame = pd.read_csv(out / f'comparisons_{kind}.csv')
        assert len(frame) == 12
        assert frame['comparison'].str.endswith(' vs ECC').all()
        assert (frame['delta'] > 0).all()
    summary = json.loads((out / 'summary.json').read_text())
    assert summary['folds'] == 5 and summary['competitors'] == 12
    assert summary['verdict'] in ('Statistically Superior', 'Statistical Tie')
    assert 'Verdict' in capsys.readouterr().out


def test_stats_unknown_control(tmp_path, data_dir):
    args = ['stats', '--input', str(data_dir / 'fold_losses.csv'), '--control', 'Nope',
            '--out', str(tmp_path)]
    assert main(args) == EXIT_UNKNOWN_CONTROL


def test_stats_bad_input(tmp_path):
    bad = tmp_path / 'bad.csv'
    bad.write_text('model,fold,mae\nECC,0,1.0\n')
    assert main(['stats', '--input', str(bad), '--control', 'ECC',
                 '--out', str(tmp_path)]) == EXIT_BAD_INPUT
    assert main(['stats', '--input', str(tmp_path / 'missing.csv'), '--control', 'ECC',
                 '--out', str(tmp_path)]) == EXIT_BAD_INPUT


# ==================== INSPECT ====================

def test_inspect_benzene(capsys):
    assert main(['inspect', 'c1ccccc1']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'cell counts: (18, 30, 18, 1)' in out
    assert 'betti: (1, 1, 5, 0)' in out
    assert 'laplacian kernel dims: (1, 1, 5, 0)' in out
    assert 'valid chain complex: True' in out


def test_inspect_graph_file(tmp_path, capsys):
    path = tmp_path / 'ethane.json'
    path.write_text(json.dumps(graph_to_dict(parse_smiles('CC'))))
    assert main(['inspect', str(path), '--kind', 'graph-file']) == EXIT_OK
    assert 'betti: (1, 0, 1, 0)' in capsys.readouterr().out


def test_inspect_bad_smiles(capsys):
    assert main(['inspect', 'C1CC']) == EXIT_BAD_INPUT
    assert 'cannot parse' in capsys.readouterr().err


def test_inspect_impossible_charge(capsys):
    assert main(['inspect', '[C+7]']) == EXIT_BAD_INPUT
    assert 'negative electrons' in capsys.readouterr().err
