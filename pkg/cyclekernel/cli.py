"""
Command-line entry point.

$ cyclekernel kernel --config configs/uniform3.json --out out/uniform3
$ cyclekernel bound --config configs/bound_reflection.json --seed-override 3

Exit codes: 0 when every verdict passes, 1 when one fails (or a map that must
be an automorphism is not), 2 for usage and config errors.
"""

import argparse
import os
import sys

from .configurator import load_config, override
from .divergence import check_pushforward_property
from .errors import ConfigError, CycleKernelError, DivergedLoss, MissingInverse, NotAutomorphism
from .kernel import format_orbit_summary, verify_free_transitive
from .maps import map_from_dict
from .perturbation import affine_shift_sequence, asymptotic_check, check_bound
from .probspace import space_from_dict
from .reports import write_csv, write_json
from .trainer import bimodal_task, gaussian_task, gradient_check, seed_sweep, train_toy

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
GRADIENT_TOL = 1e-4
TASKS = {'gaussian': gaussian_task, 'bimodal': bimodal_task}


def cmd_kernel(config, out_dir):
    p = config.params
    X, Y = space_from_dict(p['X']), space_from_dict(p['Y'])
    report = verify_free_transitive(X, Y, p.get('mass_tol', 1e-9))
    print(format_orbit_summary(report))
    rows = [{'automorphism': phi.name, **{f's{j}': int(i) for j, i in enumerate(row)}}
            for phi, row in zip(report.catalogue.automorphisms, report.catalogue.action_table)]
    write_json(out_dir, 'kernel', report.to_dict(), config)
    write_csv(out_dir, 'kernel_actions', rows)
    return EXIT_OK if report.verdict else EXIT_FAIL


def cmd_pushforward(config, out_dir):
    p = config.params
    tol = p.get('tol', 1e-2)
    rows = []
    for block in p['blocks']:
        pairs = [(space_from_dict(pair['p']), space_from_dict(pair['q'])) for pair in block['pairs']]
        maps = [map_from_dict(m) for m in block['maps']]
        for phi in maps:
            if not phi.has_inverse:
                raise MissingInverse(f"block {block.get('name', '?')}: map {phi.name} has no inverse")
        for i, (dp, dq) in enumerate(pairs):
            for phi in maps:
                for spec in p['divergences']:
                    report = check_pushforward_property(spec, dp, dq, phi, tol)
                    rows.append({'block': block.get('name', ''), 'pair': i, **report.to_dict()})
                    print(f"{block.get('name', '')} pair {i} {phi.name:>20} {spec:>10}: gap {report.gap:.3e}"
                          f"{'' if report.verdict else '  FAIL'}")
    passed = all(r['verdict'] for r in rows)
    print(f"verdict: {'PASS' if passed else 'FAIL'} ({sum(r['verdict'] for r in rows)}/{len(rows)})")
    write_json(out_dir, 'pushforward', {'verdict': passed, 'rows': rows}, config)
    write_csv(out_dir, 'pushforward', rows)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_bound(config, out_dir):
    p = config.params
    X, Y = space_from_dict(p['X']), space_from_dict(p['Y'])
    loss_config = config.loss_config()
    preservation_tol = p.get('preservation_tol')
    lipschitz_pairs = p.get('lipschitz_pairs', 1000)
    pairs = [(pair.get('name', f'pair{i}'), map_from_dict(pair['G'], X, Y), map_from_dict(pair['F'], Y, X))
             for i, pair in enumerate(p['pairs'])]
    automorphisms = [map_from_dict(a, X) for a in p['automorphisms']]

    rows = []
    for name, G, F in pairs:
        for phi in automorphisms:
            try:
                report = check_bound(G, F, phi, X, Y, loss_config, preservation_tol, lipschitz_pairs)
            except NotAutomorphism as e:
                print(f"pair {name}, automorphism {phi.name}: {e}")
                return EXIT_FAIL
            rows.append({'pair': name, **report.to_dict()})
            print(f"{name} x {phi.name}: lhs {report.lhs:.4f} <= rhs {report.rhs:.4f} "
                  f"(slack {report.slack:.2e}, stderr {report.mc_stderr:.1e})")
    passed = all(r['verdict'] for r in rows)
    doc = {'verdict': passed, 'rows': rows}

    if 'asymptotic' in p:
        a = p['asymptotic']
        if a.get('sequence', 'affine_shift') != 'affine_shift':
            raise ConfigError(f"unknown asymptotic sequence: {a['sequence']!r}")
        phi = map_from_dict(a['automorphism'], X)
        try:
            asym = asymptotic_check(affine_shift_sequence(a.get('length', 40)), phi, X, Y, loss_config,
                                    a.get('tail_window'), preservation_tol)
        except NotAutomorphism as e:
            print(f"asymptotic automorphism {phi.name}: {e}")
            return EXIT_FAIL
        print(f"asymptotic: tail lhs {max(r.lhs for r in asym.series[-asym.tail_window:]):.4f} "
              f"<= limit {asym.limit_rhs:.4f}: {'PASS' if asym.verdict else 'FAIL'}")
        doc['asymptotic'] = asym.to_dict()
        write_csv(out_dir, 'bound_asymptotic', asym.rows())
        passed = passed and asym.verdict

    doc['verdict'] = passed
    print(f"verdict: {'PASS' if passed else 'FAIL'}")
    write_json(out_dir, 'bound', doc, config)
    write_csv(out_dir, 'bound', rows)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_train(config, out_dir):
    p = config.params
    if p['task'] not in TASKS:
        raise ConfigError(f"unknown task {p['task']!r}, expected one of {sorted(TASKS)}")
    task = TASKS[p['task']]()
    train_config = config.train_config()
    doc, status = {}, EXIT_OK

    if p.get('gradient_check', False):
        check = gradient_check(task, train_config, seed=config.seed)
        print(f"gradient check: relative error {check.rel_error:.2e}")
        doc['gradient_check'] = check.to_dict()
        if not check.rel_error <= GRADIENT_TOL:
            status = EXIT_FAIL

    if 'seeds' in p:
        sweep = seed_sweep(task, train_config, p['seeds'])
        print(f"classes: {sweep.histogram}, loss equivalence gap {sweep.loss_equivalence_gap:.4f}")
        doc.update(sweep.to_dict())
        write_csv(out_dir, 'train_sweep', sweep.rows())
    else:
        record = train_toy(task, train_config)
        doc.update(record.to_dict())
        for ckpt in record.checkpoints:
            write_json(os.path.join(out_dir, 'checkpoints'), f"step_{ckpt['step']:06d}", ckpt, config)
    write_json(out_dir, 'train', doc, config)
    return status


COMMANDS = {'kernel': cmd_kernel, 'pushforward': cmd_pushforward, 'bound': cmd_bound, 'train': cmd_train}


def build_parser():
    parser = argparse.ArgumentParser(prog='cyclekernel', description=__doc__.strip().splitlines()[0])
    parser.add_argument('command', choices=sorted(COMMANDS))
    parser.add_argument('--config', required=True, help='path to the JSON config')
    parser.add_argument('--out', default='out', help='output directory (default: out)')
    parser.add_argument('--seed-override', dest='seed_override', default=None, help='replaces the config seed')
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        config = load_config(args.config, args.command)
        if args.seed_override is not None:
            config = override(config, 'seed', args.seed_override)
        return COMMANDS[args.command](config, args.out)
    except (NotAutomorphism, DivergedLoss) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (CycleKernelError, ValueError, KeyError, TypeError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
