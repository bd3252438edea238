import json
import os
from pathlib import Path

import pandas as pd
import pytest

from cyclekernel.cli import main
from cyclekernel.reports import read_json

CONFIGS = Path(__file__).resolve().parent.parent / 'configs'

QUICK_TRAIN = {'steps': 20, 'batch_size': 64, 'pool_size': 2000, 'eval_samples': 5000,
               'checkpoint_interval': 10}


def run(command, config, out, *extra):
    return main([command, '--config', str(config), '--out', str(out), *extra])


def write_config(tmp_path, doc, name='config.json'):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def one_block(maps, tol=0.01):
    gaussian = {'type': 'gaussian', 'dim': 1, 'radius': 8.0, 'resolution': 1024}
    return {'command': 'pushforward', 'tol': tol, 'divergences': ['KL'],
            'blocks': [{'name': '1d', 'maps': maps,
                        'pairs': [{'p': {**gaussian, 'mean': [0.0], 'std': [1.0]},
                                   'q': {**gaussian, 'mean': [1.0], 'std': [1.0]}}]}]}


# -----------------------------------------------------------------------------
# kernel

@pytest.mark.parametrize('name', ['uniform3.json', 'mismatch.json'])
def test_kernel_configs_pass(name, tmp_path):
    assert run('kernel', CONFIGS / name, tmp_path) == 0
    doc = read_json(tmp_path / 'kernel.json')
    assert doc['verdict']
    assert doc['config']['command'] == 'kernel'
    assert (tmp_path / 'kernel_actions.csv').exists()


def test_kernel_summary_is_printed(tmp_path, capsys):
    run('kernel', CONFIGS / 'uniform3.json', tmp_path)
    assert 'verdict: PASS' in capsys.readouterr().out


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / 'a', tmp_path / 'b'
    assert run('kernel', CONFIGS / 'uniform3.json', a) == 0
    assert run('kernel', CONFIGS / 'uniform3.json', b) == 0
    assert read_json(a / 'kernel.json') == read_json(b / 'kernel.json')
    assert (a / 'kernel_actions.csv').read_bytes() == (b / 'kernel_actions.csv').read_bytes()
    assert 'created_at' in read_json(a / 'kernel.json', drop_timestamp=False)


def assert_reruns_match(command, config, tmp_path, files):
    a, b = tmp_path / 'a', tmp_path / 'b'
    assert run(command, config, a) == run(command, config, b)
    assert read_json(a / f'{command}.json') == read_json(b / f'{command}.json')
    for name in files:
        if name.endswith('.json'):
            assert read_json(a / name) == read_json(b / name)
        else:
            assert (a / name).read_bytes() == (b / name).read_bytes()


def test_pushforward_reruns_match(tmp_path):
    maps = [{'kind': 'shift', 'offset': [0.37]}, {'kind': 'reflection', 'center': [0.0]}]
    assert_reruns_match('pushforward', write_config(tmp_path, one_block(maps)), tmp_path, ['pushforward.csv'])


def test_bound_reruns_match(tmp_path):
    assert_reruns_match('bound', CONFIGS / 'bound_reflection.json', tmp_path, ['bound.csv'])


def test_train_reruns_match(tmp_path):
    config = write_config(tmp_path, {'command': 'train', 'seed': 1, 'task': 'gaussian', 'train': QUICK_TRAIN},
                          'quick_train.json')
    assert_reruns_match('train', config, tmp_path, ['checkpoints/step_000010.json', 'checkpoints/step_000020.json'])


# -----------------------------------------------------------------------------
# config errors

def test_unknown_key_is_a_usage_error(tmp_path, capsys):
    doc = json.loads((CONFIGS / 'uniform3.json').read_text())
    doc['colour'] = 'red'
    assert run('kernel', write_config(tmp_path, doc), tmp_path) == 2
    assert 'Unknown config key: colour' in capsys.readouterr().err


def test_malformed_and_missing_configs(tmp_path):
    bad = tmp_path / 'bad.json'
    bad.write_text('{"command": "kernel", ')
    assert run('kernel', bad, tmp_path) == 2
    assert run('kernel', tmp_path / 'nope.json', tmp_path) == 2


def test_config_for_another_command(tmp_path):
    assert run('bound', CONFIGS / 'uniform3.json', tmp_path) == 2


def test_missing_required_key(tmp_path):
    assert run('kernel', write_config(tmp_path, {'command': 'kernel', 'X': {'type': 'finite', 'labels': ['a'],
                                                                              'masses': [1.0]}}), tmp_path) == 2


def test_bad_arguments():
    assert main(['kernel']) == 2
    assert main(['spectrum', '--config', 'x.json']) == 2


def test_seed_override(tmp_path, capsys):
    assert run('kernel', CONFIGS / 'uniform3.json', tmp_path, '--seed-override', '3') == 0
    assert 'Overriding: seed = 3' in capsys.readouterr().out
    assert read_json(tmp_path / 'kernel.json')['config']['seed'] == 3


@pytest.mark.parametrize('value', ['abc', '1.5', 'True'])
def test_seed_override_needs_an_int(value, tmp_path):
    assert run('kernel', CONFIGS / 'uniform3.json', tmp_path, '--seed-override', value) == 2


# -----------------------------------------------------------------------------
# pushforward

def test_pushforward_matrix(tmp_path):
    assert run('pushforward', CONFIGS / 'pushforward_matrix.json', tmp_path) == 0
    table = pd.read_csv(tmp_path / 'pushforward.csv')
    # 1d: 3 pairs x 2 maps, 2d: 3 pairs x 3 maps, 5 divergences each
    assert len(table) == (6 + 9) * 5
    assert table['verdict'].all()


def test_pushforward_zero_tolerance_fails(tmp_path):
    config = write_config(tmp_path, one_block([{'kind': 'shift', 'offset': [0.37]}], tol=0.0))
    assert run('pushforward', config, tmp_path) == 1
    assert not read_json(tmp_path / 'pushforward.json')['verdict']


def test_pushforward_rejects_a_net(tmp_path):
    net = {'kind': 'parametric_net', 'layers': [
        {'weight': [[1.0], [0.5]], 'bias': [0.0, 0.0]},
        {'weight': [[1.0, 0.0], [0.0, 1.0]], 'bias': [0.0, 0.0]},
        {'weight': [[1.0, 1.0]], 'bias': [0.0]}]}
    assert run('pushforward', write_config(tmp_path, one_block([net])), tmp_path) == 2


# -----------------------------------------------------------------------------
# bound

def test_bound_exact_solution(tmp_path):
    assert run('bound', CONFIGS / 'bound_exact.json', tmp_path) == 0
    rows = read_json(tmp_path / 'bound.json')['rows']
    assert len(rows) == 3
    assert rows[0]['slack'] == 0.0
    assert all(abs(r['slack']) <= 1e-12 for r in rows)


def test_bound_not_automorphism(tmp_path, capsys):
    assert run('bound', CONFIGS / 'bound_not_automorphism.json', tmp_path) == 1
    assert 'not measure-preserving' in capsys.readouterr().out


def test_bound_reflection(tmp_path):
    assert run('bound', CONFIGS / 'bound_reflection.json', tmp_path) == 0
    table = pd.read_csv(tmp_path / 'bound.csv')
    assert table['verdict'].all()
    assert (table['lipschitz'] == 1.0).all()


def test_bound_asymptotic(tmp_path):
    assert run('bound', CONFIGS / 'bound_asymptotic.json', tmp_path) == 0
    assert read_json(tmp_path / 'bound.json')['asymptotic']['verdict']
    assert len(pd.read_csv(tmp_path / 'bound_asymptotic.csv')) == 40


# -----------------------------------------------------------------------------
# train

def test_train_rejects_zero_steps(tmp_path):
    config = write_config(tmp_path, {'command': 'train', 'task': 'gaussian', 'train': {'steps': 0}})
    assert run('train', config, tmp_path) == 2


def test_train_rejects_unknown_task(tmp_path):
    config = write_config(tmp_path, {'command': 'train', 'task': 'spiral'})
    assert run('train', config, tmp_path) == 2


def test_train_writes_checkpoints(tmp_path):
    config = write_config(tmp_path, {'command': 'train', 'seed': 2, 'task': 'gaussian', 'train': QUICK_TRAIN})
    assert run('train', config, tmp_path / 'out') == 0
    assert sorted(os.listdir(tmp_path / 'out' / 'checkpoints')) == ['step_000010.json', 'step_000020.json']
    doc = read_json(tmp_path / 'out' / 'train.json')
    assert doc['config']['seed'] == 2
    assert len(doc['history']['loss']) == 20
    assert read_json(tmp_path / 'out' / 'checkpoints' / 'step_000010.json')['step'] == 10


def test_train_sweep(tmp_path):
    config = write_config(tmp_path, {'command': 'train', 'task': 'gaussian', 'train': QUICK_TRAIN,
                                     'seeds': [0, 1]})
    assert run('train', config, tmp_path) == 0
    assert list(pd.read_csv(tmp_path / 'train_sweep.csv')['seed']) == [0, 1]
    assert sum(read_json(tmp_path / 'train.json')['histogram'].values()) == 2


def test_train_sweep_needs_two_seeds(tmp_path):
    config = write_config(tmp_path, {'command': 'train', 'task': 'gaussian', 'train': QUICK_TRAIN, 'seeds': [0]})
    assert run('train', config, tmp_path) == 2
