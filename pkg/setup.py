from setuptools import setup

setup(
    name='conic_forms',
    version='1.0.0',
    py_modules=[
        'expr_core',
        'vectorfield',
        'symmetry',
        'liealg',
        'classifier',
        'numerics',
        'nullforms',
        'conic_session',
        'conic_forms',
    ],
    install_requires=[
        'numpy',
        'pandas',
        'sympy',
    ],
    entry_points={
        'console_scripts': [
            'conic-forms=conic_forms:main',
        ],
    },
    description='Feedback classification of 3D control-affine systems against the conic null-forms',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
    ],
    python_requires='>=3.8',
)
