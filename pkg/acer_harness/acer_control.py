#!/usr/bin/env python3
import argparse
import json
import logging
import os
import sys
from acer_harness import acer_exception, config as experiment_config, experiment, mdp as mdp_core, verify

def run(config_path, override_args):
    overrides = dict(experiment_config.parse_override(text) for text in override_args)
    config = experiment_config.load_config(config_path, overrides)
    status = experiment.run_experiment(config)
    with open(os.path.join(config.output_dir, 'report.txt'), encoding='utf-8') as file:
        print(file.read(), end='')
    return status

def verify_level(level, fault, output):
    results = verify.verify_suite(level, fault)
    for check in results['checks']:
        print(f'{"PASS" if check["passed"] else "FAIL":5} {check["name"]}')
    if output:
        experiment.write_json(results, output)
    return experiment.EXIT_OK if results['passed'] else experiment.EXIT_RUN_ABORTED

def probe(checkpoint_path):
    print(json.dumps(experiment.probe(checkpoint_path), indent=2, sort_keys=True))
    return experiment.EXIT_OK

def gen_mdp(spec, output):
    if os.path.isfile(spec):
        spec_dict = experiment_config.read_json_object(spec)
    else:
        try:
            spec_dict = json.loads(spec)
        except json.JSONDecodeError as error:
            raise acer_exception.Acer_Exception({
                'errorcode': 'Invalid config',
                'data': {'field': 'spec', 'message': 'not a file or JSON object: ' + str(error)},
            }) from error
        if not isinstance(spec_dict, dict):
            raise acer_exception.Acer_Exception({
                'errorcode': 'Invalid config',
                'data': {'field': 'spec', 'message': 'generator spec must be a JSON object'},
            })
    spec_dict = {key: value for key, value in spec_dict.items() if key != 'path'}
    mdp = experiment_config.build_config({'mdp': spec_dict, 'T': 2}).mdp
    if output:
        mdp_core.save_mdp(mdp, output)
    else:
        print(json.dumps(mdp.to_dict(), indent=2))
    return experiment.EXIT_OK

def main(argv=None):
    parser = argparse.ArgumentParser(description='Actor-Critic with Evolving Reward harness')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    subparsers = parser.add_subparsers(dest='command', title='commands', required=True)

    run_parser = subparsers.add_parser('run', help='Run an experiment config; extra --key=value arguments override config fields')
    run_parser.add_argument('config', help='Experiment config JSON')
    verify_parser = subparsers.add_parser('verify', help='Run the property checks')
    verify_parser.add_argument('-l', '--level', dest='level', default='fast', choices=['fast', 'full'], help='Check level')
    verify_parser.add_argument('-f', '--fault', dest='fault', default=None, choices=['projection_radius'], help='Inject a fault')
    verify_parser.add_argument('-o', '--output', dest='output', default=None, help='Write results JSON here')
    probe_parser = subparsers.add_parser('probe', help='Oracle snapshot at a checkpoint')
    probe_parser.add_argument('checkpoint', help='Checkpoint JSON')
    gen_parser = subparsers.add_parser('gen-mdp', help='Generate an MDP from a generator spec')
    gen_parser.add_argument('spec', help='Generator spec, a JSON file or an inline JSON object')
    gen_parser.add_argument('-o', '--output', dest='output', default=None, help='Write the MDP JSON here')
    args, extra = parser.parse_known_args(argv)
    if extra and args.command != 'run':
        parser.error('unrecognized arguments: ' + ' '.join(extra))
    command = args.command

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    try:
        if command == 'run':
            status = run(args.config, extra)
        elif command == 'verify':
            status = verify_level(args.level, args.fault, args.output)
        elif command == 'probe':
            status = probe(args.checkpoint)
        elif command == 'gen-mdp':
            status = gen_mdp(args.spec, args.output)
        else:
            print(f'Unknown command {command}')
            status = experiment.EXIT_CONFIG_ERROR
    except acer_exception.Acer_Exception as error:
        print('Exit! Error code: ' + error.type + ', Description: ' + error.message)
        status = experiment.EXIT_CONFIG_ERROR
    except OSError as error:
        print('Exit! ' + str(error))
        status = experiment.EXIT_CONFIG_ERROR
    return status

if __name__ == '__main__':
    sys.exit(main())
