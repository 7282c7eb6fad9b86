__title__ = 'GripSim'
__description__ = ('Quasi-static simulation and design analysis of a 1-DOF '
                   'self-adaptive, self-locking robotic gripper')
__url__ = 'https://gripsim.readthedocs.io/'
__github_url__ = 'https://github.com/gripsim/gripsim'
__version__ = '0.3.0-dev'
__license__ = 'MIT'
